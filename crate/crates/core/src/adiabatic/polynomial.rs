use std::collections::BTreeMap;

use super::OneHotLayout;
use crate::{Error, Result};

/// Pseudo-Boolean polynomial `offset + Σ c_S Π_{i∈S} x_i` over `x ∈ {0,1}ⁿ`.
///
/// Monomials are keyed by their sorted, duplicate-free variable sets, so
/// `x_i² = x_i` is applied on insertion.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinaryPolynomial {
    n_vars: usize,
    offset: f64,
    terms: BTreeMap<Vec<usize>, f64>,
}

/// Treatment of products of two different levels of the same angle group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SameGroupProducts {
    /// Dropped: they vanish on every one-hot assignment, and the one-hot
    /// penalty is left to rule the other assignments out.
    Eliminate,
    Keep,
}

impl BinaryPolynomial {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            ..Self::default()
        }
    }

    pub fn constant(n_vars: usize, value: f64) -> Self {
        Self {
            n_vars,
            offset: value,
            terms: BTreeMap::new(),
        }
    }

    /// `Σ_i coeffs[i]·x_{vars[i]}`.
    pub fn linear(n_vars: usize, vars: &[usize], coeffs: &[f64]) -> Self {
        let mut p = Self::new(n_vars);
        for (&v, &c) in vars.iter().zip(coeffs) {
            p.add_term(&[v], c);
        }
        p
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.terms.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, vars: &[usize]) -> f64 {
        let mut key = vars.to_vec();
        key.sort_unstable();
        key.dedup();
        if key.is_empty() {
            self.offset
        } else {
            self.terms.get(&key).copied().unwrap_or(0.0)
        }
    }

    pub fn add_term(&mut self, vars: &[usize], coeff: f64) {
        let mut key = vars.to_vec();
        key.sort_unstable();
        key.dedup();
        self.add_sorted(key, coeff);
    }

    fn add_sorted(&mut self, key: Vec<usize>, coeff: f64) {
        if key.is_empty() {
            self.offset += coeff;
            return;
        }
        if let Some(&last) = key.last() {
            self.n_vars = self.n_vars.max(last + 1);
        }
        let entry = self.terms.entry(key).or_insert(0.0);
        *entry += coeff;
    }

    /// Highest monomial degree (0 for a constant).
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[bool]) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .filter(|(vars, _)| vars.iter().all(|&v| x[v]))
                .map(|(_, c)| c)
                .sum::<f64>()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n_vars: self.n_vars,
            offset: self.offset * factor,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c * factor)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.offset += other.offset;
        for (k, &c) in &other.terms {
            self.add_sorted(k.clone(), c);
        }
        self.n_vars = self.n_vars.max(other.n_vars);
    }

    /// Product with `x_i² = x_i`; with [`SameGroupProducts::Eliminate`] any
    /// monomial holding two levels of one group is dropped.
    pub fn mul(&self, other: &Self, groups: &OneHotLayout, same_group: SameGroupProducts) -> Self {
        let mut out = Self::new(self.n_vars.max(other.n_vars));
        let lhs = std::iter::once((Vec::new(), self.offset)).chain(self.terms.iter().map(|(k, c)| (k.clone(), *c)));
        let rhs: Vec<(Vec<usize>, f64)> = std::iter::once((Vec::new(), other.offset))
            .chain(other.terms.iter().map(|(k, c)| (k.clone(), *c)))
            .collect();
        for (a, ca) in lhs {
            if ca == 0.0 {
                continue;
            }
            for (b, cb) in &rhs {
                if *cb == 0.0 {
                    continue;
                }
                let mut key: Vec<usize> = a.iter().chain(b).copied().collect();
                key.sort_unstable();
                key.dedup();
                if same_group == SameGroupProducts::Eliminate && has_group_clash(&key, groups) {
                    continue;
                }
                out.add_sorted(key, ca * cb);
            }
        }
        out
    }

    /// Flattened form for fast evaluation of assignments packed in a `u64`.
    pub fn compile(&self) -> Result<CompiledPolynomial> {
        if self.n_vars > 64 {
            return Err(Error::Solver(format!(
                "{} variables do not fit a 64-bit assignment mask",
                self.n_vars
            )));
        }
        Ok(CompiledPolynomial {
            offset: self.offset,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| **c != 0.0)
                .map(|(k, &c)| (k.iter().fold(0u64, |m, &v| m | 1 << v), c))
                .collect(),
        })
    }
}

fn has_group_clash(sorted: &[usize], groups: &OneHotLayout) -> bool {
    sorted
        .windows(2)
        .any(|w| matches!((groups.group_of(w[0]), groups.group_of(w[1])), (Some(a), Some(b)) if a == b))
}

/// Polynomial as `(monomial mask, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPolynomial {
    pub offset: f64,
    pub terms: Vec<(u64, f64)>,
}

impl CompiledPolynomial {
    pub fn evaluate(&self, mask: u64) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .filter(|(m, _)| mask & m == *m)
                .map(|(_, c)| c)
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idempotence_on_insert() {
        let mut p = BinaryPolynomial::new(3);
        p.add_term(&[2, 0, 2], 1.5);
        p.add_term(&[0, 2], 0.5);
        assert_eq!(p.term_count(), 1);
        assert_eq!(p.coefficient(&[0, 2]), 2.0);
        assert_eq!(p.degree(), 2);
        p.add_term(&[], 3.0);
        assert_eq!(p.offset(), 3.0);
    }

    #[test]
    fn square_with_and_without_elimination() {
        let g = OneHotLayout::new(1, 2);
        let l = BinaryPolynomial::linear(2, &[0, 1], &[2.0, 3.0]);
        let kept = l.mul(&l, &g, SameGroupProducts::Keep);
        assert_eq!(kept.coefficient(&[0]), 4.0);
        assert_eq!(kept.coefficient(&[1]), 9.0);
        assert_eq!(kept.coefficient(&[0, 1]), 12.0);
        let elim = l.mul(&l, &g, SameGroupProducts::Eliminate);
        assert_eq!(elim.coefficient(&[0, 1]), 0.0);
        assert_eq!(elim.term_count(), 2);
        for x in [[true, false], [false, true]] {
            assert_eq!(kept.evaluate(&x), elim.evaluate(&x));
        }
    }

    #[test]
    fn compiled_matches_direct_evaluation() {
        let mut p = BinaryPolynomial::constant(4, -1.0);
        p.add_term(&[0, 1, 3], 2.5);
        p.add_term(&[2], -0.75);
        p.add_term(&[1, 2], 4.0);
        let c = p.compile().unwrap();
        for mask in 0u64..16 {
            let x: Vec<bool> = (0..4).map(|i| mask >> i & 1 == 1).collect();
            assert_eq!(c.evaluate(mask), p.evaluate(&x));
        }
    }
}

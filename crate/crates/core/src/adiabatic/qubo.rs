use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{BinaryPolynomial, CompiledPolynomial, OneHotLayout};
use crate::{Error, Result};

/// Auxiliary variable standing for the product `left·right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryVar {
    pub index: usize,
    pub left: usize,
    pub right: usize,
    /// Weight of the substitution penalty `x_l x_r − 2x_l z − 2x_r z + 3z`.
    pub strength: f64,
}

/// `offset + Σ aᵢxᵢ + Σ_{i<j} bᵢⱼxᵢxⱼ`.
///
/// Variables `0..groups.n_vars()` are the one-hot level variables; any
/// higher index is an auxiliary introduced by [`quadratize`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    pub linear: Vec<f64>,
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
    pub penalty_lambda: f64,
    pub groups: OneHotLayout,
    pub auxiliaries: Vec<AuxiliaryVar>,
}

impl QuboModel {
    pub fn n_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn n_original(&self) -> usize {
        self.n_vars() - self.auxiliaries.len()
    }

    /// Symmetric lookup of `b_ij`.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.quadratic.get(&key).copied().unwrap_or(0.0)
    }

    pub fn energy(&self, x: &[bool]) -> f64 {
        let lin: f64 = self.linear.iter().zip(x).filter(|(_, &b)| b).map(|(a, _)| a).sum();
        let quad: f64 = self
            .quadratic
            .iter()
            .filter(|((i, j), _)| x[*i] && x[*j])
            .map(|(_, b)| b)
            .sum();
        self.offset + lin + quad
    }

    /// Extends an assignment of the original variables with every auxiliary
    /// set to its defining product.
    pub fn complete_assignment(&self, original: &[bool]) -> Vec<bool> {
        let mut x = original[..self.n_original()].to_vec();
        x.resize(self.n_vars(), false);
        for aux in &self.auxiliaries {
            x[aux.index] = x[aux.left] && x[aux.right];
        }
        x
    }

    /// Neighbour lists `(j, b_ij)` for every variable.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n_vars()];
        for (&(i, j), &b) in &self.quadratic {
            adj[i].push((j, b));
            adj[j].push((i, b));
        }
        adj
    }

    pub fn compile(&self) -> Result<CompiledPolynomial> {
        if self.n_vars() > 64 {
            return Err(Error::Solver(format!(
                "{} variables do not fit a 64-bit assignment mask",
                self.n_vars()
            )));
        }
        let linear = self.linear.iter().enumerate().map(|(i, &a)| (1u64 << i, a));
        let quad = self.quadratic.iter().map(|(&(i, j), &b)| (1u64 << i | 1u64 << j, b));
        Ok(CompiledPolynomial {
            offset: self.offset,
            terms: linear.chain(quad).filter(|(_, c)| *c != 0.0).collect(),
        })
    }

    /// Converts a polynomial that is already at most quadratic.
    pub fn from_polynomial(poly: &BinaryPolynomial, groups: &OneHotLayout, penalty_lambda: f64) -> Result<Self> {
        if poly.degree() > 2 {
            return Err(Error::Config(format!(
                "polynomial of degree {} is not quadratic",
                poly.degree()
            )));
        }
        let n = poly.n_vars().max(groups.n_vars());
        let mut model = Self {
            linear: vec![0.0; n],
            quadratic: BTreeMap::new(),
            offset: poly.offset(),
            penalty_lambda,
            groups: *groups,
            auxiliaries: Vec::new(),
        };
        for (vars, c) in poly.terms() {
            match *vars {
                [i] => model.linear[i] += c,
                [i, j] => *model.quadratic.entry((i, j)).or_insert(0.0) += c,
                _ => unreachable!("degree checked above"),
            }
        }
        Ok(model)
    }

    /// Writes the model as `i j coefficient` lines (`i = j` for linear terms)
    /// after a `<variables> <offset>` header and `#` comment lines.
    pub fn write_triples<W: Write>(&self, mut out: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{} {}", self.n_vars(), self.offset)?;
        for (i, a) in self.linear.iter().enumerate().filter(|(_, a)| **a != 0.0) {
            writeln!(out, "{i} {i} {a}")?;
        }
        for ((i, j), b) in self.quadratic.iter().filter(|(_, b)| **b != 0.0) {
            writeln!(out, "{i} {j} {b}")?;
        }
        Ok(())
    }
}

/// Coefficients read back from the triple format.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboTriples {
    pub n_vars: usize,
    pub offset: f64,
    pub linear: Vec<f64>,
    pub quadratic: BTreeMap<(usize, usize), f64>,
}

pub fn read_triples<R: BufRead>(reader: R) -> Result<QuboTriples> {
    let bad = |line: usize, msg: &str| Error::Data(format!("qubo line {line}: {msg}"));
    let mut header: Option<(usize, f64)> = None;
    let mut linear = Vec::new();
    let mut quadratic = BTreeMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<qubo>", e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match (&header, fields.as_slice()) {
            (None, [vars, offset]) => {
                let vars = vars.parse().map_err(|_| bad(n + 1, "bad variable count"))?;
                let offset = offset.parse().map_err(|_| bad(n + 1, "bad offset"))?;
                linear = vec![0.0; vars];
                header = Some((vars, offset));
            }
            (Some((vars, _)), [i, j, c]) => {
                let i: usize = i.parse().map_err(|_| bad(n + 1, "bad index"))?;
                let j: usize = j.parse().map_err(|_| bad(n + 1, "bad index"))?;
                let c: f64 = c.parse().map_err(|_| bad(n + 1, "bad coefficient"))?;
                if i >= *vars || j >= *vars {
                    return Err(bad(n + 1, "index beyond declared variable count"));
                }
                if i == j {
                    linear[i] += c;
                } else {
                    *quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
                }
            }
            _ => return Err(bad(n + 1, "unexpected field count")),
        }
    }
    let (n_vars, offset) = header.ok_or_else(|| Error::Data("qubo file has no header".into()))?;
    Ok(QuboTriples {
        n_vars,
        offset,
        linear,
        quadratic,
    })
}

/// Reduces a higher-order polynomial to a QUBO by repeated pair substitution.
///
/// Each round picks the variable pair that co-occurs in the most monomials of
/// degree ≥ 3 (ties: lowest pair), replaces it in all of them by a new
/// auxiliary `z`, and adds `M·(x_i x_j − 2x_i z − 2x_j z + 3z)`. The weight
/// `M` is `penalty_lambda`, raised to twice the absolute coefficient mass of
/// the substituted monomials when that is larger, so that `z = x_i x_j` is
/// the unique best choice and minimizing over auxiliaries recovers the
/// original polynomial exactly.
pub fn quadratize(poly: &BinaryPolynomial, groups: &OneHotLayout, penalty_lambda: f64) -> QuboModel {
    let mut work: BTreeMap<Vec<usize>, f64> = poly
        .terms()
        .filter(|(_, c)| *c != 0.0)
        .map(|(k, c)| (k.to_vec(), c))
        .collect();
    let mut next_var = poly.n_vars().max(groups.n_vars());
    let mut auxiliaries = Vec::new();

    loop {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for key in work.keys().filter(|k| k.len() >= 3) {
            for (a, &i) in key.iter().enumerate() {
                for &j in &key[a + 1..] {
                    *counts.entry((i, j)).or_insert(0) += 1;
                }
            }
        }
        let Some((&(i, j), _)) = counts
            .iter()
            .fold(None, |best: Option<(&(usize, usize), &usize)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
        else {
            break;
        };

        let z = next_var;
        next_var += 1;
        let targets: Vec<Vec<usize>> = work
            .keys()
            .filter(|k| k.len() >= 3 && k.binary_search(&i).is_ok() && k.binary_search(&j).is_ok())
            .cloned()
            .collect();
        let mass: f64 = targets.iter().map(|k| work[k].abs()).sum();
        let strength = penalty_lambda.max(2.0 * mass);
        for key in targets {
            let c = work.remove(&key).expect("key collected from map");
            let mut reduced: Vec<usize> = key.into_iter().filter(|&v| v != i && v != j).collect();
            reduced.push(z);
            *work.entry(reduced).or_insert(0.0) += c;
        }
        for (key, c) in [
            (vec![i, j], strength),
            (vec![i, z], -2.0 * strength),
            (vec![j, z], -2.0 * strength),
            (vec![z], 3.0 * strength),
        ] {
            *work.entry(key).or_insert(0.0) += c;
        }
        auxiliaries.push(AuxiliaryVar {
            index: z,
            left: i,
            right: j,
            strength,
        });
    }

    let mut model = QuboModel {
        linear: vec![0.0; next_var],
        quadratic: BTreeMap::new(),
        offset: poly.offset(),
        penalty_lambda,
        groups: *groups,
        auxiliaries,
    };
    for (key, c) in work {
        match key.as_slice() {
            [a] => model.linear[*a] += c,
            [a, b] => *model.quadratic.entry((*a, *b)).or_insert(0.0) += c,
            _ => unreachable!("all monomials of degree ≥ 3 were reduced"),
        }
    }
    model
}

use serde::{Deserialize, Serialize};

use super::Discretization;
use crate::qsim::AnsatzParams;
use crate::{Error, Result};

/// Variable layout: angle `k` at level `v` is binary variable `k·levels + v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotLayout {
    pub groups: usize,
    pub levels: usize,
}

impl OneHotLayout {
    pub fn new(groups: usize, levels: usize) -> Self {
        Self { groups, levels }
    }

    pub fn n_vars(&self) -> usize {
        self.groups * self.levels
    }

    pub fn var(&self, group: usize, level: usize) -> usize {
        group * self.levels + level
    }

    /// Group of an original variable; `None` for auxiliaries.
    pub fn group_of(&self, var: usize) -> Option<usize> {
        (var < self.n_vars()).then(|| var / self.levels)
    }

    /// Number of feasible assignments, `levels^groups`.
    pub fn feasible_count(&self) -> u64 {
        (self.levels as u64).pow(self.groups as u32)
    }

    /// Selected level of every group, or the first group that is not one-hot.
    pub fn levels_of(&self, assignment: &[bool]) -> std::result::Result<Vec<usize>, usize> {
        (0..self.groups)
            .map(|g| {
                let hot: Vec<usize> = (0..self.levels).filter(|&v| assignment[self.var(g, v)]).collect();
                match hot.as_slice() {
                    [one] => Ok(*one),
                    _ => Err(g),
                }
            })
            .collect()
    }

    pub fn is_feasible(&self, assignment: &[bool]) -> bool {
        self.levels_of(assignment).is_ok()
    }

    /// Bitmask form of the one-hot test, for assignments stored in a `u64`.
    pub fn is_feasible_mask(&self, mask: u64) -> bool {
        let level_mask = (1u64 << self.levels) - 1;
        (0..self.groups).all(|g| ((mask >> (g * self.levels)) & level_mask).count_ones() == 1)
    }

    /// One-hot assignment selecting `levels[g]` in every group.
    pub fn encode(&self, levels: &[usize]) -> Vec<bool> {
        let mut x = vec![false; self.n_vars()];
        for (g, &v) in levels.iter().enumerate() {
            x[self.var(g, v)] = true;
        }
        x
    }

    /// All `levels^groups` level choices in lexicographic order.
    pub fn all_level_choices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.feasible_count()).map(move |mut n| {
            let mut choice = vec![0; self.groups];
            for slot in choice.iter_mut().rev() {
                *slot = (n % self.levels as u64) as usize;
                n /= self.levels as u64;
            }
            choice
        })
    }
}

/// Inverse discretization: `θ_k = Σ_v values[v]·x_{k,v}`.
pub fn decode(assignment: &[bool], disc: &Discretization, groups: &OneHotLayout) -> Result<AnsatzParams> {
    if disc.parts() != groups.levels {
        return Err(Error::Config(format!(
            "grid has {} levels, variable layout has {}",
            disc.parts(),
            groups.levels
        )));
    }
    if assignment.len() < groups.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: groups.n_vars(),
            actual: assignment.len(),
        });
    }
    let levels = groups
        .levels_of(assignment)
        .map_err(|g| Error::Solver(format!("assignment is not one-hot in angle group {g}")))?;
    AnsatzParams::ring_only(levels.iter().map(|&v| disc.values[v]).collect())
}

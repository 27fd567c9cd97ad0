use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{decode, BinaryPolynomial, CompiledPolynomial, Discretization, OneHotLayout, QuboModel};
use crate::qsim::AnsatzParams;
use crate::{Error, Result};

/// Largest variable count [`solve_exhaustive`] will enumerate.
pub const MAX_ENUMERATION_VARS: usize = 26;

const CHUNK_BITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// The best sample satisfies every one-hot group.
    Feasible,
    /// No feasible sample was found; `best_assignment` is the lowest-energy
    /// infeasible one and there is no decoded angle vector.
    NoFeasibleSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub best_assignment: Vec<bool>,
    pub best_energy: f64,
    /// Exhaustive: assignments enumerated. Annealing: samples drawn.
    pub explored_count: u64,
    /// Explored assignments (or samples) that are one-hot in every group.
    pub feasible_count: u64,
    pub elapsed_seconds: f64,
    pub decoded_theta: Option<AnsatzParams>,
}

/// Energies within this relative distance are treated as tied, so the
/// lower assignment wins whatever the summation order.
pub(crate) fn improves(candidate: f64, best: f64) -> bool {
    candidate < best - 1e-12 * best.abs().max(1.0)
}

/// Objective that can be enumerated over `u64` assignment masks.
pub trait Enumerable {
    fn n_vars(&self) -> usize;
    fn compile(&self) -> Result<CompiledPolynomial>;
}

impl Enumerable for BinaryPolynomial {
    fn n_vars(&self) -> usize {
        BinaryPolynomial::n_vars(self)
    }
    fn compile(&self) -> Result<CompiledPolynomial> {
        BinaryPolynomial::compile(self)
    }
}

impl Enumerable for QuboModel {
    fn n_vars(&self) -> usize {
        QuboModel::n_vars(self)
    }
    fn compile(&self) -> Result<CompiledPolynomial> {
        QuboModel::compile(self)
    }
}

#[derive(Clone, Copy)]
struct ChunkScan {
    feasible: u64,
    best: Option<(f64, u64)>,
}

/// Enumerates all `2ⁿ` assignments in increasing integer order (bit `i` is
/// variable `i`), counts the one-hot feasible ones and keeps the lowest
/// energy among them; ties go to the smaller integer.
pub fn solve_exhaustive<M: Enumerable>(model: &M, groups: &OneHotLayout, disc: &Discretization) -> Result<SolveResult> {
    let n = model.n_vars().max(groups.n_vars());
    if n > MAX_ENUMERATION_VARS {
        return Err(Error::Solver(format!(
            "{n} binary variables exceed the enumeration bound of {MAX_ENUMERATION_VARS}; use the annealing solver"
        )));
    }
    let start = Instant::now();
    let compiled = model.compile()?;
    let chunk_bits = n.min(CHUNK_BITS);
    let chunks = 1u64 << (n - chunk_bits);

    let scans: Vec<ChunkScan> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut scan = ChunkScan {
                feasible: 0,
                best: None,
            };
            let base = chunk << chunk_bits;
            for mask in base..base + (1u64 << chunk_bits) {
                if !groups.is_feasible_mask(mask) {
                    continue;
                }
                scan.feasible += 1;
                let e = compiled.evaluate(mask);
                if scan.best.is_none_or(|(b, _)| improves(e, b)) {
                    scan.best = Some((e, mask));
                }
            }
            scan
        })
        .collect();

    let mut feasible = 0;
    let mut best: Option<(f64, u64)> = None;
    for scan in scans {
        feasible += scan.feasible;
        if let Some((e, m)) = scan.best {
            if best.is_none_or(|(b, _)| improves(e, b)) {
                best = Some((e, m));
            }
        }
    }
    let (energy, mask) = best.ok_or_else(|| Error::Solver("no one-hot feasible assignment exists".into()))?;
    let assignment: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
    let decoded = decode(&assignment, disc, groups)?;
    Ok(SolveResult {
        status: SolveStatus::Feasible,
        best_assignment: assignment,
        best_energy: energy,
        explored_count: 1u64 << n,
        feasible_count: feasible,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        decoded_theta: Some(decoded),
    })
}

//! Training by discretized angles and binary optimization.
//!
//! Each ring angle is restricted to a grid of `p` values and represented by
//! `p` one-hot binary variables. The least-squares fit of the phase-dropped
//! single-block output to the label vectors becomes a degree-`K` binary
//! polynomial; one-hot penalties make it unconstrained and pair
//! substitution makes it quadratic. The minimum is found by enumeration or
//! by simulated annealing and mapped back to angles.

mod anneal;
mod discretize;
mod exhaustive;
mod objective;
mod onehot;
mod polynomial;
mod qubo;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use anneal::{solve_anneal, AnnealSchedule};
pub use discretize::{discretize, Discretization};
pub use exhaustive::{solve_exhaustive, Enumerable, SolveResult, SolveStatus, MAX_ENUMERATION_VARS};
pub use objective::{
    add_one_hot_penalties, build_objective, build_objective_with, default_penalty_lambda, dominant_penalty_lambda,
    least_squares_loss, multi_hot_ratio, record_targets, sampled_penalty_lambda, PENALTY_SAMPLE,
};
pub use onehot::{decode, OneHotLayout};
pub use polynomial::{BinaryPolynomial, CompiledPolynomial, SameGroupProducts};
pub use qubo::{quadratize, read_triples, AuxiliaryVar, QuboModel, QuboTriples};

use crate::data::TrendRow;
use crate::qsim::{AnsatzParams, RegisterLayout};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Exhaustive,
    Anneal,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(SolverKind::Exhaustive),
            "anneal" => Ok(SolverKind::Anneal),
            other => Err(Error::Config(format!("unknown solver `{other}` (exhaustive|anneal)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdiabaticConfig {
    pub parts: usize,
    pub range_max: f64,
    pub solver: SolverKind,
    pub sweeps: usize,
    pub reads: usize,
    /// One-hot penalty weight; sampled from the objective's spread when unset.
    pub penalty_lambda: Option<f64>,
    pub rng_seed: u64,
}

impl Default for AdiabaticConfig {
    fn default() -> Self {
        Self {
            parts: 4,
            range_max: 1.0,
            solver: SolverKind::Exhaustive,
            sweeps: 2000,
            reads: 16,
            penalty_lambda: None,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticReport {
    pub theta: AnsatzParams,
    pub solve: SolveResult,
    /// Least-squares objective at the decoded angles.
    pub objective: f64,
    pub penalty_lambda: f64,
    pub binary_variables: usize,
    pub auxiliary_variables: usize,
    /// Objective expansion, penalties and (for annealing) quadratization.
    pub build_seconds: f64,
    pub solve_seconds: f64,
}

fn penalty_for(objective: &BinaryPolynomial, groups: &OneHotLayout, config: &AdiabaticConfig) -> Result<f64> {
    let lambda = config
        .penalty_lambda
        .unwrap_or_else(|| default_penalty_lambda(objective, groups, seed::derive(config.rng_seed, 0)));
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("penalty weight {lambda} must be positive")));
    }
    Ok(lambda)
}

/// The quadratic model the annealer would receive for `rows`.
pub fn build_qubo(rows: &[TrendRow], layout: &RegisterLayout, config: &AdiabaticConfig) -> Result<QuboModel> {
    let disc = discretize(config.parts, config.range_max)?;
    let groups = OneHotLayout::new(layout.ring_size(), disc.parts());
    let objective = build_objective(rows, &disc, layout)?;
    let lambda = penalty_for(&objective, &groups, config)?;
    Ok(quadratize(
        &add_one_hot_penalties(&objective, &groups, lambda),
        &groups,
        lambda,
    ))
}

/// Builds the model from `rows`, solves it and decodes the angles.
pub fn train_adiabatic(
    rows: &[TrendRow],
    layout: &RegisterLayout,
    config: &AdiabaticConfig,
) -> Result<AdiabaticReport> {
    let build_start = Instant::now();
    let disc = discretize(config.parts, config.range_max)?;
    let groups = OneHotLayout::new(layout.ring_size(), disc.parts());
    let objective = build_objective(rows, &disc, layout)?;
    let lambda = penalty_for(&objective, &groups, config)?;
    let penalized = add_one_hot_penalties(&objective, &groups, lambda);

    let (solve, build_seconds, aux) = match config.solver {
        SolverKind::Exhaustive => {
            let build = build_start.elapsed().as_secs_f64();
            (solve_exhaustive(&penalized, &groups, &disc)?, build, 0)
        }
        SolverKind::Anneal => {
            let model = quadratize(&penalized, &groups, lambda);
            let build = build_start.elapsed().as_secs_f64();
            let schedule =
                AnnealSchedule::for_model(&model, config.sweeps, config.reads, seed::derive(config.rng_seed, 1));
            (solve_anneal(&model, &schedule, &disc)?, build, model.auxiliaries.len())
        }
    };
    let theta = match (&solve.status, &solve.decoded_theta) {
        (SolveStatus::Feasible, Some(theta)) => theta.clone(),
        _ => {
            return Err(Error::Solver(format!(
                "annealing returned no one-hot feasible sample in {} reads",
                solve.explored_count
            )))
        }
    };
    Ok(AdiabaticReport {
        objective: least_squares_loss(rows, &theta, layout)?,
        theta,
        penalty_lambda: lambda,
        binary_variables: groups.n_vars(),
        auxiliary_variables: aux,
        build_seconds,
        solve_seconds: solve.elapsed_seconds,
        solve,
    })
}

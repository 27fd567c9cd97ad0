//! Gradient-free training of the simulated QRNN with SPSA.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::TrendRow;
use crate::qrnn::{predict_batch, QrnnConfig};
use crate::qsim::AnsatzParams;
use crate::{seed, Error, Result};

/// `e^{-10}`, added inside the logarithm so the loss stays finite.
pub const PROBABILITY_FLOOR: f64 = 4.539_992_976_248_485_4e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossForm {
    /// `−(1/N) Σ log(p_true + e^{-10})`, where `p_true` is the probability
    /// given to the record's actual label.
    #[default]
    NegLogLikelihood,
    /// `(1/N) Σ log(p + e^{-10})` with `p = P(|1⟩)` and no leading minus.
    /// Minimizing it pushes every prediction towards 0.
    Literal,
}

/// Per-record loss term.
pub fn record_loss(probability_one: f64, label: u8, form: LossForm) -> f64 {
    match form {
        LossForm::NegLogLikelihood => {
            let p_true = if label == 1 {
                probability_one
            } else {
                1.0 - probability_one
            };
            -(p_true + PROBABILITY_FLOOR).ln()
        }
        LossForm::Literal => (probability_one + PROBABILITY_FLOOR).ln(),
    }
}

pub fn loss(rows: &[TrendRow], theta: &AnsatzParams, config: &QrnnConfig) -> Result<f64> {
    loss_with(rows, theta, config, LossForm::NegLogLikelihood)
}

pub fn loss_with(rows: &[TrendRow], theta: &AnsatzParams, config: &QrnnConfig, form: LossForm) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::Domain("loss of an empty dataset".into()));
    }
    let preds = predict_batch(rows, theta, config)?;
    // Sequential sum keeps the reduction order fixed.
    let total: f64 = preds
        .iter()
        .zip(rows)
        .map(|(p, r)| record_loss(p.probability_one, r.label, form))
        .sum();
    Ok(total / rows.len() as f64)
}

/// SPSA gains `a_k = a/(k+1+A)^α`, `c_k = c/(k+1)^γ` and stopping rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    #[serde(rename = "big_a")]
    pub stability: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub max_iterations: usize,
    /// Stop when the best loss improves by less than this over the window.
    /// An infinite tolerance stops after the first iteration.
    pub convergence_tol: f64,
    pub convergence_window: usize,
    pub rng_seed: u64,
    /// Iterates are clamped to `[0, theta_max]`.
    pub theta_max: f64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: 0.2,
            c: 0.1,
            stability: 10.0,
            alpha: 0.602,
            gamma: 0.101,
            max_iterations: 200,
            convergence_tol: 1e-8,
            convergence_window: 25,
            rng_seed: 0,
            theta_max: std::f64::consts::PI,
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.c > 0.0) {
            return Err(Error::Config("SPSA gains a and c must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0 && self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(
                "SPSA exponents alpha and gamma must lie in (0, 1]".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("SPSA needs at least one iteration".into()));
        }
        if self.convergence_window == 0 {
            return Err(Error::Config("convergence window must be at least 1".into()));
        }
        if !(self.theta_max > 0.0) {
            return Err(Error::Config("theta_max must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of [`spsa_minimize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpsaOutcome {
    pub best: Vec<f64>,
    pub best_loss: f64,
    pub initial_loss: f64,
    /// Objective at the iterate after each update.
    pub loss_history: Vec<f64>,
    pub iterations: usize,
    /// Objective calls spent on gradient estimates (two per iteration).
    pub gradient_evaluations: usize,
    /// Objective calls spent tracking the iterate (one per iteration plus the start).
    pub monitor_evaluations: usize,
}

fn finite(value: f64, what: &str, iteration: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Optimizer(format!(
            "objective returned {value} at {what} in iteration {iteration}"
        )))
    }
}

/// Minimizes `objective` from `theta0` with two-sided simultaneous
/// perturbation gradient estimates and Rademacher directions.
pub fn spsa_minimize<F>(mut objective: F, theta0: &[f64], config: &SpsaConfig) -> Result<SpsaOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    config.validate()?;
    let clamp = |v: f64| v.clamp(0.0, config.theta_max);
    let mut rng = seed::rng(config.rng_seed);
    let mut theta: Vec<f64> = theta0.iter().map(|&v| clamp(v)).collect();
    let initial_loss = finite(objective(&theta)?, "the starting point", 0)?;

    let window = if config.convergence_tol.is_infinite() {
        1
    } else {
        config.convergence_window
    };
    let mut best = theta.clone();
    let mut best_loss = initial_loss;
    // best_trace[k] = best loss after k iterations
    let mut best_trace = vec![best_loss];
    let mut loss_history = Vec::new();
    let mut gradient_evaluations = 0;

    for k in 0..config.max_iterations {
        let ak = config.a / (k as f64 + 1.0 + config.stability).powf(config.alpha);
        let ck = config.c / (k as f64 + 1.0).powf(config.gamma);
        let delta: Vec<f64> = (0..theta.len())
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + ck * d).collect();
        let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - ck * d).collect();
        let f_plus = finite(objective(&plus)?, "the + perturbation", k + 1)?;
        let f_minus = finite(objective(&minus)?, "the - perturbation", k + 1)?;
        gradient_evaluations += 2;

        let diff = (f_plus - f_minus) / (2.0 * ck);
        for (t, d) in theta.iter_mut().zip(&delta) {
            *t = clamp(*t - ak * diff / d);
        }
        let current = finite(objective(&theta)?, "the updated iterate", k + 1)?;
        loss_history.push(current);
        if current < best_loss {
            best_loss = current;
            best.clone_from(&theta);
        }
        best_trace.push(best_loss);

        let done = k + 1;
        if done >= window && best_trace[done - window] - best_loss < config.convergence_tol {
            break;
        }
    }

    let iterations = loss_history.len();
    Ok(SpsaOutcome {
        best,
        best_loss,
        initial_loss,
        loss_history,
        iterations,
        gradient_evaluations,
        monitor_evaluations: iterations + 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub best_theta: AnsatzParams,
    pub best_loss: f64,
    pub initial_loss: f64,
    pub loss_history: Vec<f64>,
    pub iterations: usize,
    /// Circuit executions for gradient estimates: iterations × 2 × records.
    pub execution_count: u64,
    /// Circuit executions spent on tracking the best iterate.
    pub monitor_count: u64,
    pub elapsed_seconds: f64,
}

/// SPSA on the training loss, starting from `theta0`.
pub fn train_classical(
    rows: &[TrendRow],
    theta0: &AnsatzParams,
    config: &QrnnConfig,
    form: LossForm,
    spsa: &SpsaConfig,
) -> Result<TrainReport> {
    if rows.is_empty() {
        return Err(Error::Domain("cannot train on an empty dataset".into()));
    }
    theta0.check_layout(&config.layout, config.single_qubit_layer)?;
    let start = Instant::now();
    let layout = config.layout;
    let outcome = spsa_minimize(
        |flat| loss_with(rows, &AnsatzParams::from_flat(flat, &layout)?, config, form),
        &theta0.to_flat(),
        spsa,
    )?;
    let n = rows.len() as u64;
    Ok(TrainReport {
        best_theta: AnsatzParams::from_flat(&outcome.best, &layout)?,
        best_loss: outcome.best_loss,
        initial_loss: outcome.initial_loss,
        loss_history: outcome.loss_history,
        iterations: outcome.iterations,
        execution_count: outcome.gradient_evaluations as u64 * n,
        monitor_count: outcome.monitor_evaluations as u64 * n,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

//! Feed-forward baseline: one sigmoid hidden layer and a sigmoid output,
//! trained by full-batch gradient descent on binary cross-entropy.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TrendRow;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    /// Zero drops the hidden layer and trains plain logistic regression.
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub rng_seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_units: 8,
            learning_rate: 0.5,
            epochs: 1000,
            rng_seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive and finite (got {})",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Weights stored flat: hidden weights row by row, hidden biases, output
/// weights, output bias. Without a hidden layer only the last two remain and
/// the output weights act on the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub n_inputs: usize,
    pub hidden_units: usize,
    pub params: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl MlpModel {
    pub fn param_count(n_inputs: usize, hidden_units: usize) -> usize {
        if hidden_units == 0 {
            n_inputs + 1
        } else {
            hidden_units * n_inputs + hidden_units + hidden_units + 1
        }
    }

    pub fn zeros(n_inputs: usize, hidden_units: usize) -> Self {
        Self {
            n_inputs,
            hidden_units,
            params: vec![0.0; Self::param_count(n_inputs, hidden_units)],
        }
    }

    /// Uniform weights in `±1/√fan_in`, zero biases.
    pub fn random(n_inputs: usize, hidden_units: usize, rng_seed: u64) -> Self {
        let mut model = Self::zeros(n_inputs, hidden_units);
        let mut rng = seed::rng(rng_seed);
        let mut draw = |fan_in: usize| {
            let r = 1.0 / (fan_in.max(1) as f64).sqrt();
            rng.random_range(-r..=r)
        };
        if hidden_units == 0 {
            for w in &mut model.params[..n_inputs] {
                *w = draw(n_inputs);
            }
        } else {
            let (w1, rest) = model.params.split_at_mut(hidden_units * n_inputs);
            for w in w1 {
                *w = draw(n_inputs);
            }
            for w in &mut rest[hidden_units..2 * hidden_units] {
                *w = draw(hidden_units);
            }
        }
        model
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Output logit, with the hidden activations written into `hidden`.
    fn logit(&self, x: &[f64], hidden: &mut Vec<f64>) -> f64 {
        let (n, h) = (self.n_inputs, self.hidden_units);
        hidden.clear();
        if h == 0 {
            let w = &self.params[..n];
            return w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.params[n];
        }
        let w1 = &self.params[..h * n];
        let b1 = &self.params[h * n..h * n + h];
        let w2 = &self.params[h * n + h..h * n + 2 * h];
        let b2 = self.params[h * n + 2 * h];
        for u in 0..h {
            let z: f64 = w1[u * n..(u + 1) * n].iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b1[u];
            hidden.push(sigmoid(z));
        }
        hidden.iter().zip(w2).map(|(a, w)| a * w).sum::<f64>() + b2
    }

    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(sigmoid(self.logit(x, &mut Vec::new())))
    }

    /// Mean binary cross-entropy and its gradient with respect to `params`.
    pub fn loss_and_gradient(&self, features: &[Vec<f64>], labels: &[u8]) -> Result<(f64, Vec<f64>)> {
        check_batch(features, labels)?;
        let (n, h) = (self.n_inputs, self.hidden_units);
        let mut grad = vec![0.0; self.params.len()];
        let mut total = 0.0;
        let mut hidden = Vec::with_capacity(h);
        for (x, &y) in features.iter().zip(labels) {
            self.check_input(x)?;
            let y = f64::from(y);
            let z = self.logit(x, &mut hidden);
            total += softplus(z) - y * z;
            let dz = sigmoid(z) - y;
            if h == 0 {
                for (g, xi) in grad[..n].iter_mut().zip(x) {
                    *g += dz * xi;
                }
                grad[n] += dz;
                continue;
            }
            let w2_at = h * n + h;
            for u in 0..h {
                let a = hidden[u];
                let w2 = self.params[w2_at + u];
                grad[w2_at + u] += dz * a;
                let dh = dz * w2 * a * (1.0 - a);
                for (g, xi) in grad[u * n..(u + 1) * n].iter_mut().zip(x) {
                    *g += dh * xi;
                }
                grad[h * n + u] += dh;
            }
            grad[w2_at + h] += dz;
        }
        let scale = 1.0 / features.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok((total * scale, grad))
    }

    pub fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<u8>> {
        features
            .par_iter()
            .map(|x| self.probability(x).map(|p| u8::from(p >= 0.5)))
            .collect()
    }

    pub fn predict_rows(&self, rows: &[TrendRow]) -> Result<Vec<u8>> {
        self.predict(&row_features(rows))
    }
}

fn check_batch(features: &[Vec<f64>], labels: &[u8]) -> Result<()> {
    if features.is_empty() {
        return Err(Error::Domain("cannot train on an empty dataset".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    Ok(())
}

/// The network input for a row is its window, most recent value first.
pub fn row_features(rows: &[TrendRow]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.window.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Loss before each update.
    pub loss_history: Vec<f64>,
    pub epochs: usize,
    /// Epochs × records.
    pub execution_count: u64,
    pub elapsed_seconds: f64,
}

pub fn train_features(features: &[Vec<f64>], labels: &[u8], config: &MlpConfig) -> Result<(MlpModel, MlpReport)> {
    config.validate()?;
    check_batch(features, labels)?;
    let start = Instant::now();
    let mut model = MlpModel::random(features[0].len(), config.hidden_units, config.rng_seed);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (loss, grad) = model.loss_and_gradient(features, labels)?;
        if !loss.is_finite() {
            return Err(Error::Optimizer(format!("MLP loss became {loss} at epoch {epoch}")));
        }
        history.push(loss);
        for (p, g) in model.params.iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Optimizer(format!("MLP weights diverged at epoch {epoch}")));
        }
    }
    let (final_loss, _) = model.loss_and_gradient(features, labels)?;
    if !final_loss.is_finite() {
        return Err(Error::Optimizer(format!("MLP loss became {final_loss} after training")));
    }
    let report = MlpReport {
        initial_loss: history.first().copied().unwrap_or(final_loss),
        final_loss,
        loss_history: history,
        epochs: config.epochs,
        execution_count: (config.epochs * features.len()) as u64,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}

pub fn train_mlp(rows: &[TrendRow], config: &MlpConfig) -> Result<(MlpModel, MlpReport)> {
    let labels: Vec<u8> = rows.iter().map(|r| r.label).collect();
    train_features(&row_features(rows), &labels, config)
}

pub fn predict_mlp(model: &MlpModel, rows: &[TrendRow]) -> Result<Vec<u8>> {
    model.predict_rows(rows)
}

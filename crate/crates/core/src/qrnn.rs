//! Plain QRNN: identical recurrent blocks applied in sequence, each one
//! encoding a value on the data register, running the ansatz, reading the
//! first data qubit and resetting the data register for the next value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TrendRow;
use crate::qsim::{
    ansatz_diagonal, apply_diagonal, encode_input_with, measure_first_data_qubit, reset_data_register_with,
    rotation_layer, AnsatzParams, Encoding, OperatorMode, QuantumState, RegisterLayout,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QrnnConfig {
    pub layout: RegisterLayout,
    /// Number of recurrent blocks, equal to the window length.
    pub history_depth: usize,
    /// Replicate the input on every data qubit.
    pub duplicate_input: bool,
    /// Append an `R_y` layer on every qubit after the `Rzz` ring.
    pub single_qubit_layer: bool,
    /// Label is 1 when the measured probability is at least this value.
    pub threshold: f64,
}

impl Default for QrnnConfig {
    fn default() -> Self {
        Self {
            layout: RegisterLayout::default(),
            history_depth: 3,
            duplicate_input: true,
            single_qubit_layer: false,
            threshold: 0.5,
        }
    }
}

impl QrnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history_depth == 0 {
            return Err(Error::Config("history depth must be at least 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        Ok(())
    }

    pub fn encoding(&self) -> Encoding {
        if self.duplicate_input {
            Encoding::Replicated
        } else {
            Encoding::FirstQubitOnly
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPrediction {
    pub probability_one: f64,
    pub label: u8,
}

impl TrendPrediction {
    pub fn from_probability(p: f64, threshold: f64) -> Self {
        Self {
            probability_one: p,
            label: u8::from(p >= threshold),
        }
    }
}

/// Measured `P(|1⟩)` after every block, for a window given oldest first.
pub fn block_probabilities(window: &[f64], theta: &AnsatzParams, config: &QrnnConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if window.len() != config.history_depth {
        return Err(Error::DimensionMismatch {
            expected: config.history_depth,
            actual: window.len(),
        });
    }
    theta.check_layout(&config.layout, config.single_qubit_layer)?;
    let layout = &config.layout;
    let encoding = config.encoding();
    let ansatz = ansatz_diagonal(theta, layout, OperatorMode::Unitary)?;

    let mut probabilities = Vec::with_capacity(window.len());
    let mut state: Option<QuantumState> = None;
    for &x in window {
        let encoded = match &state {
            None => encode_input_with(x, layout, encoding)?,
            Some(prev) => reset_data_register_with(prev, layout, x, encoding)?,
        };
        let mut evolved = apply_diagonal(&encoded, &ansatz)?;
        if config.single_qubit_layer {
            evolved = rotation_layer(&evolved, layout, &theta.rotations)?;
        }
        // The probability is read without collapsing: the following reset
        // discards the data register either way.
        probabilities.push(measure_first_data_qubit(&evolved, layout)?);
        state = Some(evolved);
    }
    Ok(probabilities)
}

/// Runs the network over a window given oldest first.
pub fn forward(window: &[f64], theta: &AnsatzParams, config: &QrnnConfig) -> Result<TrendPrediction> {
    let probs = block_probabilities(window, theta, config)?;
    let last = *probs.last().expect("history depth is at least one");
    Ok(TrendPrediction::from_probability(last, config.threshold))
}

/// [`forward`] on every row, in row order.
pub fn predict_batch(rows: &[TrendRow], theta: &AnsatzParams, config: &QrnnConfig) -> Result<Vec<TrendPrediction>> {
    rows.par_iter()
        .map(|row| forward(&row.chronological(), theta, config))
        .collect()
}

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Allowed values of one rotation angle and their `exp(θ/2)` images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub values: Vec<f64>,
    pub exp_half: Vec<f64>,
    pub range_max: f64,
}

impl Discretization {
    /// An explicit grid, e.g. a single forced level.
    pub fn from_values(values: Vec<f64>, range_max: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("a grid needs at least one value".into()));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("grid values must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("grid values must be finite".into()));
        }
        let exp_half = values.iter().map(|v| (v / 2.0).exp()).collect();
        Ok(Self {
            values,
            exp_half,
            range_max,
        })
    }

    pub fn parts(&self) -> usize {
        self.values.len()
    }

    /// Index of the grid value nearest to `theta`.
    pub fn nearest_level(&self, theta: f64) -> usize {
        (0..self.values.len())
            .min_by(|&a, &b| {
                (self.values[a] - theta)
                    .abs()
                    .total_cmp(&(self.values[b] - theta).abs())
            })
            .expect("grid is non-empty")
    }
}

/// Midpoints of `parts` equal cells over `[0, range_max]`.
pub fn discretize(parts: usize, range_max: f64) -> Result<Discretization> {
    if parts < 2 {
        return Err(Error::Config(format!(
            "discretization needs at least 2 parts, got {parts}"
        )));
    }
    if !(range_max > 0.0 && range_max.is_finite()) {
        return Err(Error::Config(format!("angle range {range_max} must be positive")));
    }
    let values = (0..parts)
        .map(|i| range_max * (2 * i + 1) as f64 / (2 * parts) as f64)
        .collect();
    Discretization::from_values(values, range_max)
}

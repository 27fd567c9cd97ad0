use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::state::{apply_single_qubit, ry_matrix, C64};
use super::{QuantumState, RegisterLayout};
use crate::{Error, Result};

/// Rotation angles shared by every recurrent block.
///
/// `ring` holds one `Rzz` angle per ring pair. `rotations` is the optional
/// single-qubit `R_y` layer (one angle per qubit) and is empty when disabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub ring: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rotations: Vec<f64>,
}

impl AnsatzParams {
    pub fn ring_only(ring: Vec<f64>) -> Result<Self> {
        Self::new(ring, Vec::new())
    }

    pub fn new(ring: Vec<f64>, rotations: Vec<f64>) -> Result<Self> {
        if let Some(bad) = ring.iter().chain(&rotations).find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite rotation angle {bad}")));
        }
        Ok(Self { ring, rotations })
    }

    pub fn zeros(layout: &RegisterLayout, single_qubit_layer: bool) -> Self {
        let rotations = if single_qubit_layer {
            vec![0.0; layout.total()]
        } else {
            Vec::new()
        };
        Self {
            ring: vec![0.0; layout.ring_size()],
            rotations,
        }
    }

    /// Length of the flattened parameter vector for a layout.
    pub fn flat_len(layout: &RegisterLayout, single_qubit_layer: bool) -> usize {
        layout.ring_size() + if single_qubit_layer { layout.total() } else { 0 }
    }

    /// Ring angles followed by the rotation layer.
    pub fn to_flat(&self) -> Vec<f64> {
        self.ring.iter().chain(&self.rotations).copied().collect()
    }

    pub fn from_flat(flat: &[f64], layout: &RegisterLayout) -> Result<Self> {
        let ring = layout.ring_size();
        let rotations = if flat.len() == ring {
            Vec::new()
        } else if flat.len() == ring + layout.total() {
            flat[ring..].to_vec()
        } else {
            return Err(Error::Config(format!(
                "{} angles do not fit a {}-gate ring (with or without a rotation layer)",
                flat.len(),
                ring
            )));
        };
        Self::new(flat[..ring].to_vec(), rotations)
    }

    pub fn check_layout(&self, layout: &RegisterLayout, single_qubit_layer: bool) -> Result<()> {
        if self.ring.len() != layout.ring_size() {
            return Err(Error::Config(format!(
                "ansatz has {} ring angles, layout needs {}",
                self.ring.len(),
                layout.ring_size()
            )));
        }
        let want = if single_qubit_layer { layout.total() } else { 0 };
        if self.rotations.len() != want {
            return Err(Error::Config(format!(
                "ansatz has {} single-qubit angles, configuration needs {want}",
                self.rotations.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorMode {
    /// Entries `exp(i·s·θ/2)`.
    Unitary,
    /// Entries `exp(s·θ/2)`: the imaginary unit removed, for real-valued objectives.
    PhaseDropped,
}

/// Diagonal of the ring ansatz in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagonalOperator {
    Unitary(Vec<C64>),
    PhaseDropped(Vec<f64>),
}

impl DiagonalOperator {
    pub fn len(&self) -> usize {
        match self {
            DiagonalOperator::Unitary(e) => e.len(),
            DiagonalOperator::PhaseDropped(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, i: usize) -> C64 {
        match self {
            DiagonalOperator::Unitary(e) => e[i],
            DiagonalOperator::PhaseDropped(e) => C64::new(e[i], 0.0),
        }
    }
}

/// Sign of each ring term for basis state `index`: `+1` where the pair's bits
/// differ, `-1` where they agree (the `Z⊗Z` eigenvalue, negated).
pub fn ring_signs(layout: &RegisterLayout, index: usize) -> Vec<f64> {
    layout
        .ring_pairs()
        .into_iter()
        .map(|(a, b)| {
            let ba = (index >> layout.bit_of(a)) & 1;
            let bb = (index >> layout.bit_of(b)) & 1;
            if ba == bb {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

/// Diagonal of `Π_k Rzz_k(θ_k)` over the ring.
pub fn ansatz_diagonal(theta: &AnsatzParams, layout: &RegisterLayout, mode: OperatorMode) -> Result<DiagonalOperator> {
    if theta.ring.len() != layout.ring_size() {
        return Err(Error::Config(format!(
            "{} ring angles given for a {}-gate ring",
            theta.ring.len(),
            layout.ring_size()
        )));
    }
    let exponents = (0..layout.dim()).map(|j| {
        ring_signs(layout, j)
            .iter()
            .zip(&theta.ring)
            .map(|(s, t)| s * t / 2.0)
            .sum::<f64>()
    });
    Ok(match mode {
        OperatorMode::Unitary => DiagonalOperator::Unitary(exponents.map(|e| C64::from_polar(1.0, e)).collect()),
        OperatorMode::PhaseDropped => DiagonalOperator::PhaseDropped(exponents.map(f64::exp).collect()),
    })
}

/// `a'ᵢ = dᵢ·aᵢ` for vectors, `D ρ D†` for density matrices.
pub fn apply_diagonal(state: &QuantumState, op: &DiagonalOperator) -> Result<QuantumState> {
    if state.dim() != op.len() {
        return Err(Error::DimensionMismatch {
            expected: op.len(),
            actual: state.dim(),
        });
    }
    Ok(match state {
        QuantumState::Pure(a) => QuantumState::Pure(a.iter().enumerate().map(|(i, z)| op.entry(i) * z).collect()),
        QuantumState::Mixed(rho) => {
            let n = rho.nrows();
            QuantumState::Mixed(DMatrix::from_fn(n, n, |i, j| {
                op.entry(i) * rho[(i, j)] * op.entry(j).conj()
            }))
        }
    })
}

/// `R_y(φ_q)` on every qubit `q`.
pub fn rotation_layer(state: &QuantumState, layout: &RegisterLayout, angles: &[f64]) -> Result<QuantumState> {
    if angles.len() != layout.total() {
        return Err(Error::DimensionMismatch {
            expected: layout.total(),
            actual: angles.len(),
        });
    }
    let mut out = state.clone();
    for (q, a) in angles.iter().enumerate() {
        out = apply_single_qubit(&out, layout, q, &ry_matrix(*a))?;
    }
    Ok(out)
}

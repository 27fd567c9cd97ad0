use nalgebra::DMatrix;

use super::{RegisterLayout, SIM_TOLERANCE};
use crate::{Error, Result};

pub use num_complex::Complex64 as C64;

/// Purity above which a reduced hidden state is stored as a state vector again.
const PURE_THRESHOLD: f64 = 1.0 - 1e-12;

/// Register state: a state vector until a partial trace leaves the hidden
/// register mixed, a density matrix afterwards.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(Vec<C64>),
    Mixed(DMatrix<C64>),
}

impl QuantumState {
    /// `|0…0⟩` on `dim` basis states.
    pub fn zero(dim: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[0] = C64::new(1.0, 0.0);
        QuantumState::Pure(amps)
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        QuantumState::Pure(amps)
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(a) => a.len(),
            QuantumState::Mixed(rho) => rho.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&[C64]> {
        match self {
            QuantumState::Pure(a) => Some(a),
            QuantumState::Mixed(_) => None,
        }
    }

    /// Computational-basis probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure(a) => a.iter().map(|z| z.norm_sqr()).collect(),
            QuantumState::Mixed(rho) => (0..rho.nrows()).map(|i| rho[(i, i)].re).collect(),
        }
    }

    /// Σ|aᵢ|² for a vector, tr ρ for a density matrix.
    pub fn trace(&self) -> f64 {
        self.probabilities().iter().sum()
    }

    pub fn to_density(&self) -> DMatrix<C64> {
        match self {
            QuantumState::Pure(a) => {
                let n = a.len();
                DMatrix::from_fn(n, n, |i, j| a[i] * a[j].conj())
            }
            QuantumState::Mixed(rho) => rho.clone(),
        }
    }

    /// Checks normalization and, for density matrices, Hermiticity and
    /// positive semidefiniteness (eigenvalues ≥ −1e-9).
    pub fn validate(&self) -> Result<()> {
        let trace = self.trace();
        if (trace - 1.0).abs() > SIM_TOLERANCE {
            return Err(Error::Domain(format!("state trace {trace} differs from 1")));
        }
        if let QuantumState::Mixed(rho) = self {
            let n = rho.nrows();
            for i in 0..n {
                for j in 0..n {
                    if (rho[(i, j)] - rho[(j, i)].conj()).norm() > SIM_TOLERANCE {
                        return Err(Error::Domain(format!("density matrix not Hermitian at ({i},{j})")));
                    }
                }
            }
            let min = rho
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if min < -1e-9 {
                return Err(Error::Domain(format!("density matrix has eigenvalue {min}")));
            }
        }
        Ok(())
    }
}

/// How the input value is loaded onto the data register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Every data qubit carries the same rotation.
    #[default]
    Replicated,
    /// Only the first data qubit is rotated; the rest stay in `|0⟩`.
    FirstQubitOnly,
}

/// `R_y(φ)` as a row-major 2×2 matrix.
pub fn ry_matrix(angle: f64) -> [[C64; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(-s, 0.0)],
        [C64::new(s, 0.0), C64::new(c, 0.0)],
    ]
}

fn check_input(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "normalized input {x} outside [0, 1]; arccos encoding needs a min-max scaled value"
        )));
    }
    Ok(())
}

/// Real amplitudes of the data register after `R_y(arccos x)` on the
/// encoded qubits, indexed with the first data qubit as the top bit.
pub fn data_register_amplitudes(x: f64, n_data: usize, encoding: Encoding) -> Result<Vec<f64>> {
    check_input(x)?;
    let half = x.acos() / 2.0;
    let (s, c) = half.sin_cos();
    let encoded = match encoding {
        Encoding::Replicated => n_data,
        Encoding::FirstQubitOnly => 1,
    };
    let dim = 1usize << n_data;
    Ok((0..dim)
        .map(|idx| {
            (0..n_data)
                .map(|q| {
                    let bit = (idx >> (n_data - 1 - q)) & 1;
                    match (q < encoded, bit) {
                        (true, 0) => c,
                        (true, _) => s,
                        (false, 0) => 1.0,
                        (false, _) => 0.0,
                    }
                })
                .product()
        })
        .collect())
}

/// Prepares `R_y(arccos x)` on every data qubit with the hidden register in `|0…0⟩`.
pub fn encode_input(x: f64, layout: &RegisterLayout) -> Result<QuantumState> {
    encode_input_with(x, layout, Encoding::Replicated)
}

pub fn encode_input_with(x: f64, layout: &RegisterLayout, encoding: Encoding) -> Result<QuantumState> {
    let data = data_register_amplitudes(x, layout.n_data(), encoding)?;
    let hd = layout.hidden_dim();
    let mut amps = vec![C64::new(0.0, 0.0); layout.dim()];
    for (d, a) in data.iter().enumerate() {
        amps[d * hd] = C64::new(*a, 0.0);
    }
    Ok(QuantumState::Pure(amps))
}

fn check_dim(state: &QuantumState, layout: &RegisterLayout) -> Result<()> {
    if state.dim() != layout.dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            actual: state.dim(),
        });
    }
    Ok(())
}

/// Probability that the first data qubit reads `|1⟩`.
pub fn measure_first_data_qubit(state: &QuantumState, layout: &RegisterLayout) -> Result<f64> {
    check_dim(state, layout)?;
    let mask = layout.measured_index();
    let p: f64 = state
        .probabilities()
        .iter()
        .enumerate()
        .filter(|(i, _)| i & mask != 0)
        .map(|(_, p)| p)
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Reduced density matrix of the hidden register (partial trace over data).
pub fn hidden_reduced_density(state: &QuantumState, layout: &RegisterLayout) -> Result<DMatrix<C64>> {
    check_dim(state, layout)?;
    let (dd, hd) = (layout.data_dim(), layout.hidden_dim());
    let zero = C64::new(0.0, 0.0);
    Ok(match state {
        QuantumState::Pure(a) => DMatrix::from_fn(hd, hd, |h, k| {
            (0..dd).fold(zero, |acc, d| acc + a[d * hd + h] * a[d * hd + k].conj())
        }),
        QuantumState::Mixed(rho) => DMatrix::from_fn(hd, hd, |h, k| {
            (0..dd).fold(zero, |acc, d| acc + rho[(d * hd + h, d * hd + k)])
        }),
    })
}

/// Returns the state vector of a rank-one density matrix, up to global phase.
fn pure_vector(rho: &DMatrix<C64>) -> Option<Vec<C64>> {
    let purity: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
    if purity < PURE_THRESHOLD {
        return None;
    }
    let n = rho.nrows();
    let col = (0..n)
        .max_by(|&a, &b| rho[(a, a)].re.total_cmp(&rho[(b, b)].re))
        .expect("non-empty matrix");
    let scale = (0..n).map(|i| rho[(i, col)].norm_sqr()).sum::<f64>().sqrt();
    Some((0..n).map(|i| rho[(i, col)] / scale).collect())
}

/// Discards the data register and re-prepares it for `next_x`; the hidden
/// register keeps its reduced state.
pub fn reset_data_register(state: &QuantumState, layout: &RegisterLayout, next_x: f64) -> Result<QuantumState> {
    reset_data_register_with(state, layout, next_x, Encoding::Replicated)
}

pub fn reset_data_register_with(
    state: &QuantumState,
    layout: &RegisterLayout,
    next_x: f64,
    encoding: Encoding,
) -> Result<QuantumState> {
    let data = data_register_amplitudes(next_x, layout.n_data(), encoding)?;
    let hidden = hidden_reduced_density(state, layout)?;
    let (dd, hd) = (layout.data_dim(), layout.hidden_dim());
    Ok(match pure_vector(&hidden) {
        Some(h) => {
            let mut amps = Vec::with_capacity(layout.dim());
            for d in 0..dd {
                amps.extend(h.iter().map(|hz| hz * data[d]));
            }
            QuantumState::Pure(amps)
        }
        None => {
            let n = layout.dim();
            QuantumState::Mixed(DMatrix::from_fn(n, n, |i, j| {
                hidden[(i % hd, j % hd)] * (data[i / hd] * data[j / hd])
            }))
        }
    })
}

/// Applies a 2×2 gate to `qubit`; density matrices are conjugated `U ρ U†`.
pub fn apply_single_qubit(
    state: &QuantumState,
    layout: &RegisterLayout,
    qubit: usize,
    gate: &[[C64; 2]; 2],
) -> Result<QuantumState> {
    check_dim(state, layout)?;
    if qubit >= layout.total() {
        return Err(Error::Config(format!(
            "qubit {qubit} outside a {}-qubit register",
            layout.total()
        )));
    }
    let mask = 1usize << layout.bit_of(qubit);
    let n = layout.dim();
    let rotate = |v: &mut dyn FnMut(usize) -> C64, out: &mut dyn FnMut(usize, C64)| {
        for i0 in (0..n).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            let (a0, a1) = (v(i0), v(i1));
            out(i0, gate[0][0] * a0 + gate[0][1] * a1);
            out(i1, gate[1][0] * a0 + gate[1][1] * a1);
        }
    };
    Ok(match state {
        QuantumState::Pure(a) => {
            let mut next = a.clone();
            rotate(&mut |i| a[i], &mut |i, z| next[i] = z);
            QuantumState::Pure(next)
        }
        QuantumState::Mixed(rho) => {
            // rows: U ρ
            let mut left = rho.clone();
            for col in 0..n {
                rotate(&mut |i| rho[(i, col)], &mut |i, z| left[(i, col)] = z);
            }
            // columns: (U ρ) U†, i.e. conjugate gate acting on each row
            let conj = [
                [gate[0][0].conj(), gate[0][1].conj()],
                [gate[1][0].conj(), gate[1][1].conj()],
            ];
            let mut out = left.clone();
            for row in 0..n {
                for j0 in (0..n).filter(|j| j & mask == 0) {
                    let j1 = j0 | mask;
                    let (b0, b1) = (left[(row, j0)], left[(row, j1)]);
                    out[(row, j0)] = conj[0][0] * b0 + conj[0][1] * b1;
                    out[(row, j1)] = conj[1][0] * b0 + conj[1][1] * b1;
                }
            }
            QuantumState::Mixed(out)
        }
    })
}

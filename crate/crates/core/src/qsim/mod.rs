//! Exact dense simulation of the small data+hidden registers used by the QRNN.
//!
//! Basis-state indices put the data register in the most significant bits:
//! qubit `q` occupies bit `total - 1 - q`, so for a 2+2 layout the state with
//! only the first data qubit set is `|1000⟩`, index 8.

mod ansatz;
mod layout;
mod state;

pub use ansatz::{
    ansatz_diagonal, apply_diagonal, ring_signs, rotation_layer, AnsatzParams, DiagonalOperator, OperatorMode,
};
pub use layout::RegisterLayout;
pub use state::{
    apply_single_qubit, data_register_amplitudes, encode_input, encode_input_with, hidden_reduced_density,
    measure_first_data_qubit, reset_data_register, reset_data_register_with, ry_matrix, Encoding, QuantumState, C64,
};

/// Absolute tolerance for simulation identities (norm, trace, Hermiticity).
pub const SIM_TOLERANCE: f64 = 1e-10;

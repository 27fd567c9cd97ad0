use crate::{Error, Result};

/// Qubit counts of the data (`D`) and hidden (`H`) registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RegisterLayout {
    n_data: usize,
    n_hidden: usize,
}

impl RegisterLayout {
    /// Largest register this dense simulator accepts.
    pub const MAX_QUBITS: usize = 12;

    pub fn new(n_data: usize, n_hidden: usize) -> Result<Self> {
        if n_data == 0 || n_hidden == 0 {
            return Err(Error::Config(format!(
                "both registers need at least one qubit (data={n_data}, hidden={n_hidden})"
            )));
        }
        if n_data + n_hidden > Self::MAX_QUBITS {
            return Err(Error::Config(format!(
                "{} qubits exceeds the dense simulation bound of {}",
                n_data + n_hidden,
                Self::MAX_QUBITS
            )));
        }
        Ok(Self { n_data, n_hidden })
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn total(&self) -> usize {
        self.n_data + self.n_hidden
    }

    /// Dimension of the full Hilbert space.
    pub fn dim(&self) -> usize {
        1 << self.total()
    }

    pub fn data_dim(&self) -> usize {
        1 << self.n_data
    }

    pub fn hidden_dim(&self) -> usize {
        1 << self.n_hidden
    }

    /// The measured qubit is the first data qubit.
    pub fn measured_qubit(&self) -> usize {
        0
    }

    /// Bit position of `qubit` inside a basis-state index.
    pub fn bit_of(&self, qubit: usize) -> usize {
        self.total() - 1 - qubit
    }

    /// Index of the basis state with only the measured qubit set (`|10…0⟩`).
    pub fn measured_index(&self) -> usize {
        1 << self.bit_of(self.measured_qubit())
    }

    /// Number of two-qubit gates in the circuit-block ring.
    pub fn ring_size(&self) -> usize {
        self.total()
    }

    /// Ring pairs `(q0,q1), (q1,q2), …, (q_{n-1},q0)`.
    pub fn ring_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.total();
        (0..n).map(|k| (k, (k + 1) % n)).collect()
    }
}

impl Default for RegisterLayout {
    fn default() -> Self {
        Self { n_data: 2, n_hidden: 2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_indices() {
        let l = RegisterLayout::default();
        assert_eq!(l.total(), 4);
        assert_eq!(l.dim(), 16);
        assert_eq!(l.measured_index(), 8);
        assert_eq!(l.ring_pairs(), vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(RegisterLayout::new(0, 2).is_err());
        assert!(RegisterLayout::new(2, 0).is_err());
        assert!(RegisterLayout::new(7, 6).is_err());
        assert!(RegisterLayout::new(6, 6).is_ok());
    }
}

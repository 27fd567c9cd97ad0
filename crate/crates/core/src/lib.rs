//! Plain quantum recurrent neural network (pQRNN) for price-trend prediction,
//! with two training routes:
//!
//! * [`classical`]: SPSA over an exact circuit simulation of the recurrent network.
//! * [`adiabatic`]: discretized rotation angles, a phase-dropped diagonal ansatz
//!   operator, a least-squares objective expanded into a binary polynomial,
//!   reduction to QUBO, and exhaustive or simulated-annealing minimization.
//!
//! [`qsim`] is the small dense simulator both routes share, [`data`] turns daily
//! closing prices into labelled windows, [`mlp`] is the classical baseline and
//! [`report`] runs the side-by-side comparison.

pub mod adiabatic;
pub mod classical;
pub mod data;
pub mod error;
pub mod mlp;
pub mod qrnn;
pub mod qsim;
pub mod report;
pub mod seed;

pub use error::{Error, Result};

//! Quantum reservoir processing of hybrid quantum-classical input sequences
//! on a dissipative lattice of coupled nonlinear bosonic modes.

pub mod error;
pub mod metrics;
pub mod dynamics;
pub mod operator;
pub mod quantum_readout;
pub mod readout;
pub mod tasks;

pub use error::{QrcError, Result};

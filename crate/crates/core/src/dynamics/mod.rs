//! Driven-dissipative lattice dynamics: Hamiltonian, cascaded master
//! equation, RK4 integration and the warmup/inject/measure protocol.

mod config;
mod equation;
mod hamiltonian;
mod reservoir;

pub use config::{lattice_edges, lattice_shape, Coupling, ReservoirConfig, ReservoirParams};
pub use hamiltonian::{build_hamiltonian, master_rhs};
pub use reservoir::{
    inject, integrate, run_sequence, run_sequence_with_diagnostics, warmup, Diagnostics, FeatureMatrix,
    Reservoir, WarmupReport, CUTOFF_TOL, POSITIVITY_TOL, STEADY_TOL,
};

//! Trainable passive output modes over input and reservoir modes.

mod mixer;
mod nelder_mead;
mod output;
mod train;

pub use mixer::{hermitian_from_params, modes_from_params, param_count, unitary_from_params, ModeMixer, ModeSet};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use output::{output_from_moments, output_state, output_state_dense, ModeMoments, OutputState};
pub use train::{
    cost_eval, train_quantum_readout, CostKind, QuantumReadoutResult, ReadoutSpec, Stage, TraceRecord, TrainSpec,
    Trainable,
};

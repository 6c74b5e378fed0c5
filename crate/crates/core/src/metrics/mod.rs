//! Evaluation functionals: fidelity and symbol scores, Wigner errors,
//! valid prediction times, memory capacities and autocorrelation timescales.

mod autocorr;
mod memory;
mod scores;

pub use autocorr::{autocorrelation_timescale, Autocorrelation};
pub use memory::{
    bures_distance_matrix, distance_correlation_sq, distance_covariance_sq, double_center, memory_capacity_classical,
    quantum_memory_capacity, state_distance_correlation, MemoryProfile, DEGENERATE_TOL, TRAIN_FRACTION,
};
pub use scores::{
    ew_curve, ew_error, ew_term, fidelity_error, nrmse_curve, rmsf, running_root_mean, ser, variance, vpt,
};

//! Classical readouts: ridge regression, density reconstruction, closed-loop
//! generation and the echo state network baseline.

mod closed_loop;
mod density;
mod esn;
mod ridge;

pub use crate::tasks::quantize_symbol;
pub use closed_loop::{closed_loop_generate, ClosedLoopOutput, Perturbation, DIVERGENCE_LIMIT};
pub use density::{reconstruct_density, vectorize_density};
pub use esn::{esn_run, spectral_radius, Esn, EsnConfig};
pub use ridge::{default_eta, ridge_fit, ReadoutWeights};

//! Input/target generators: quantum switch, channel equalization, squeezing
//! maps, sinusoidal controls and depolarizing targets.

mod channels;
mod equalizer;
mod sequences;

pub use channels::{
    control_blocks, depolarizing_channel, depolarizing_switch_blocks, quantum_switch, switch_control_state,
    weyl_basis, KrausChannel, COMPLETENESS_TOL,
};
pub use equalizer::{gen_equalizer_data, linear_channel, nonlinear_channel, quantize_symbol, EqualizerData, SYMBOLS};
pub use sequences::{
    control_signal, control_task_sequence, cv_target, cv_task_sequence, depolarizing_target,
    depolarizing_task_sequence, squeeze_parameter, squeeze_state, switch_task_sequence, switch_weight, Delays,
    Encoding, HybridSequence, InputStates, SwitchTarget, SwitchTask, Targets,
};

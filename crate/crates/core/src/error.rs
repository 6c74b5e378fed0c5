use thiserror::Error;

/// Errors raised by the simulator, task generators and trainers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QrcError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {mode} out of range for a space with {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integration produced non-finite entries at t = {time}; the Fock cutoff is likely too small for the drive")]
    NonFinite { time: f64 },

    #[error("ridge system is singular; use a positive regularizer")]
    SingularSystem,

    #[error("closed loop diverged at step {step}: |s| = {value}")]
    Diverged { step: usize, value: f64 },

    #[error("non-finite cost at theta = {theta:?}")]
    NonFiniteCost { theta: Vec<f64> },

    #[error("output cutoff {cutoff} truncates {lost:.3e} of the output-mode population")]
    CutoffOverflow { cutoff: usize, lost: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T, E = QrcError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> QrcError {
    QrcError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

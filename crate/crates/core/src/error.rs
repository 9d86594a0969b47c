use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = TeonError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TeonError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("SVD did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    SvdNoConvergence { sweeps: usize, residual: f64 },

    #[error("Newton-Schulz iteration produced a non-finite value at step {step}")]
    NewtonSchulzDiverged { step: usize },

    #[error("non-finite gradient rejected at optimizer step {step} (group `{group}`)")]
    NonFiniteGradient { step: u64, group: String },

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid preset `{name}`: {reason}")]
    Preset { name: String, reason: String },

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("gradient check failed for `{param}`: error {error:e} exceeds tolerance {tolerance:e}")]
    GradientCheck {
        param: String,
        error: f64,
        tolerance: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TeonError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        TeonError::Dimension(msg.into())
    }
}

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("architecture mismatch: {0}")]
    Architecture(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure at Euler step {step}: {detail}")]
    NumericStep { step: usize, detail: String },

    #[error(
        "calibration failed after {states} states (best expected error {best_error:.4e} at M = {best_m}, delta = {best_delta})"
    )]
    CalibrationFailed {
        states: usize,
        best_m: u64,
        best_delta: f64,
        best_error: f64,
    },

    #[error("network format: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

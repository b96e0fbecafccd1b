use thiserror::Error;

/// Errors raised by tensor and gradient operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),
    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("gradient buffer missing on tensor {0}")]
    MissingGrad(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("scatter matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("weight vector must be nonzero")]
    ZeroWeight,
    #[error("sample is empty")]
    EmptySample,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("direction is outside the tangent space: {0}")]
    TangentViolation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

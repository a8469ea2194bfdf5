use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// `exp(-action)` left the representable range for this path.
    #[error("estimate overflow: scalar action {action} on path {path_index} is out of range")]
    EstimateOverflow { path_index: usize, action: f64 },

    #[error("lattice operator too large: {size} sites exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    /// A conditional theorem was asked to run with its hypothesis violated.
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

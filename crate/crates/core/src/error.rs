use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range {lo}..={hi}")]
    OutOfRange { index: usize, lo: usize, hi: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point ({x}, {y}) lies outside the expected region")]
    Domain { x: f64, y: f64 },

    #[error("precision {available} rows is too small for index {h} (needs {needed})")]
    Precision { h: u64, needed: usize, available: usize },

    #[error("span of dimension {dim} exceeds the enumeration limit {max}")]
    Capacity { dim: usize, max: usize },

    #[error("tolerance {tol:e} not met at depth cap, best estimate {best}")]
    ToleranceNotMet { best: f64, tol: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

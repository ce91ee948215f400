use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degree mismatch: expected {expected}, got {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("structure constants violate the Jacobi identity (max defect {0:.3e})")]
    Jacobi(f64),
    #[error("precondition failed: {what} (residual {residual:.3e})")]
    Precondition { what: String, residual: f64 },
    #[error("calibration criterion fails on the embedding: {0}")]
    Criterion(String),
    #[error("unknown preset `{name}`; available: {available}")]
    UnknownPreset { name: String, available: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

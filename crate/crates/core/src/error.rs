use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not skew-Hermitian (deviation {deviation:.3e})")]
    NotSkewHermitian { deviation: f64 },

    #[error("matrix is not traceless (|tr| = {trace:.3e})")]
    NotTraceless { trace: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("continuation failed: {0}")]
    Continuation(String),

    #[error("eigensolver did not converge after {iterations} iterations (max residual {max_residual:.3e})")]
    NonConvergence { iterations: usize, max_residual: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

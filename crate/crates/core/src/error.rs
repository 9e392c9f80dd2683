use thiserror::Error;

pub type Result<T> = std::result::Result<T, LcltError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LcltError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is singular (measure is not maximal)")]
    SingularCovariance,

    #[error("support hull has empty interior")]
    DegenerateHull,

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("point {0:?} is not in the interior of the support hull")]
    NotInterior(Vec<f64>),

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("overflow evaluating {0}")]
    Overflow(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LcltError {
    fn from(e: std::io::Error) -> Self {
        LcltError::Io(e.to_string())
    }
}

use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0}; only 1, 2 and 3 are implemented")]
    UnsupportedDimension(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    NotConverged(#[from] NotConverged),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returned when the eigensolver exhausts its iteration budget.
///
/// Carries the best Ritz values and residual norms seen so far so callers can
/// still emit a partial report.
#[derive(Debug, Clone, Error)]
#[error("eigensolver did not converge after {iterations} block steps (worst residual {worst_residual:.3e})")]
pub struct NotConverged {
    pub iterations: usize,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub worst_residual: f64,
}

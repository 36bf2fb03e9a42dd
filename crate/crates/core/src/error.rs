use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("analytic form unavailable, use numeric_spectrum")]
    AnalyticUnavailable,

    #[error("grid too coarse: {points} points for {order} modes (need at least {needed})")]
    Resolution { points: usize, order: usize, needed: usize },

    #[error("incompatible grids: expected {expected} samples, got {got}")]
    IncompatibleGrid { expected: usize, got: usize },

    #[error("truncation order {order} too short: extend truncation to resolve modes below -{threshold}")]
    ExtendTruncation { order: usize, threshold: f64 },

    #[error("pair (A, B) is not stabilizable: {0}")]
    NotStabilizable(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not positive definite (failing pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(
        "no feasible point found within the iteration budget ({iterations} Newton steps, residual {residual:.3e})"
    )]
    InfeasibleWithinBudget { iterations: usize, residual: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A matrix that must be symmetric positive definite failed its Cholesky factorization.
    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("risk parameter {theta} is outside [0, {lambda_min}) required by the information matrix")]
    ThetaOutOfRange { theta: f64, lambda_min: f64 },
    #[error("root solve did not reach tolerance after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

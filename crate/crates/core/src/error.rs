use thiserror::Error;

/// Errors surfaced by the library. Outcomes that are part of normal operation
/// (blow-up detection, Picard non-convergence) are reported through result
/// types instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("slope fit failed: {0}")]
    Fit(String),
    #[error("horizon too short: {0}")]
    Horizon(String),
    #[error("test function certification failed: {0}")]
    Certification(String),
    #[error("state overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors surfaced by construction and evaluation contracts.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("capability missing: {0}")]
    Capability(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("no convergence: {message} (residual {residual:.3e})")]
    NonConvergence { message: String, residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown model: {0}")]
    UnknownModel(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

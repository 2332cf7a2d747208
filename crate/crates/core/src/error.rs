use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("path cycling detected: {0}")]
    Cycling(String),

    #[error("argument out of range: {0}")]
    Range(String),
}

pub type Result<T> = std::result::Result<T, Error>;

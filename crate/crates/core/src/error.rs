use thiserror::Error;

/// Errors produced by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an API contract (shape mismatch, invalid rank, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A physical quantity left its admissible domain (e.g. nonpositive density).
    #[error("domain error: {0}")]
    Domain(String),

    /// A time integration produced non-finite values or otherwise failed.
    #[error("integration failure: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, Error>;

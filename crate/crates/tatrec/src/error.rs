//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid speed profile: {0}")]
    InvalidSpeed(String),
    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),
    #[error("sensor ring: {0}")]
    SensorRing(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// The solver blew up; `step` is the first time step where a NaN or an
    /// amplitude past the stability guard was observed.
    #[error("instability at step {step}: max |p| = {max_abs}")]
    Instability { step: usize, max_abs: f64 },
    #[error("trace mismatch: {0}")]
    TraceMismatch(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the rodbreak library.
#[derive(Debug, Error)]
pub enum RodError {
    /// A scalar argument lies outside the range where a formula is defined.
    #[error("{name} = {value} outside valid range {valid}")]
    Domain {
        name: &'static str,
        value: f64,
        valid: &'static str,
    },

    /// A structural precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Grid construction rejected the requested geometry.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Field data contains NaN or infinite samples.
    #[error("non-finite data: {0}")]
    NonFinite(String),

    /// A generated profile cannot be resolved on the requested grid.
    #[error("profile does not fit the grid: {0}")]
    Resolution(String),

    /// Stored frames are too sparse in time for characteristic tracing.
    #[error("frames too sparse: {0}")]
    SparseFrames(String),

    /// Invalid run configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, RodError>;

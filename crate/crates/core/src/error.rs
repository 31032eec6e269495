//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by tree operations, estimators, and numeric kernels.
#[derive(Debug, Error)]
pub enum HortonError {
    /// Malformed tree arena: dangling ids, cycles, or inconsistent links.
    #[error("malformed tree: {0}")]
    Structure(String),

    /// Metric quantity requested on a tree without edge lengths.
    #[error("operation requires edge lengths: {0}")]
    MissingLengths(String),

    /// Operation defined only for a restricted class of trees.
    #[error("unsupported tree shape: {0}")]
    UnsupportedShape(String),

    /// Empty or otherwise unusable sample.
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// Parameter outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested tolerance cannot be met (truncation, step size, ...).
    #[error("precision error: {0}")]
    Precision(String),

    /// Result not representable in the requested arithmetic.
    #[error("range error: {0}")]
    Range(String),

    /// Monotone-functional contract violated by a user-supplied functional.
    #[error("pruning functional is not monotone: {0}")]
    NonMonotone(String),

    /// Input series/potential violates a structural precondition.
    #[error("invalid series: {0}")]
    InvalidSeries(String),
}

pub type Result<T> = std::result::Result<T, HortonError>;

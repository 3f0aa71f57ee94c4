//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented domain (window length, hop,
    /// tolerance range, aliasing frequency, ...).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Input data contains NaN or infinity where finite values are required.
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    /// An operation needs an auxiliary transform that was not computed.
    #[error("missing auxiliary transform {0} (enable it when building the transform set)")]
    MissingTransform(&'static str),

    /// Two structures that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A numeric postcondition failed (e.g. imaginary residue too large).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("malformed wav file: {0}")]
    MalformedWav(String),

    #[error("unsupported wav codec: {0}")]
    UnsupportedWav(String),

    #[error("truncated wav data: {0}")]
    TruncatedWav(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

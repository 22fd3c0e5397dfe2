//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.
///
/// The variants mirror how callers are expected to react: `Config` and
/// `Structural` are programming/configuration mistakes, `Degenerate` and
/// `Numerical` are data-dependent conditions a harness may want to flag
/// rather than abort on.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible objects, e.g. functions on different grids.
    #[error("structural error: {0}")]
    Structural(String),

    /// Invalid configuration or parameter value.
    #[error("configuration error: {0}")]
    Config(String),

    /// A sample too poor to carry out the requested operation.
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// A case the library deliberately does not handle.
    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape or length constraint violated (non-power-of-two, mismatch, ...).
    #[error("size error: {0}")]
    Size(String),

    /// Invalid parameter value.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Input is degenerate for the requested operation (e.g. all-zero reference).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Requested mode is not supported by this operation.
    #[error("unsupported mode: {0}")]
    Unsupported(String),

    /// Malformed file contents.
    #[error("format error: {0}")]
    Format(String),

    /// Random placement failed to find room for all targets.
    #[error("placement congestion: {0}")]
    Congestion(String),

    /// Run-config file could not be parsed.
    #[error("config error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the process exit codes used by the `topolow`
/// binary: `Parse` -> 2, `Invalid` -> 3, `Numeric` and `Io` -> 4.
#[derive(Debug, Error)]
pub enum TopolowError {
    /// Malformed input file or token.
    #[error("parse error ({location}): {message}")]
    Parse { location: String, message: String },

    /// Structurally well-formed input that violates a documented precondition
    /// (negative dissimilarity, disconnected observation graph, bad ranges, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Numeric failure at runtime (non-finite coordinates, eigensolver stall, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl TopolowError {
    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        TopolowError::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Exit code the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            TopolowError::Parse { .. } => 2,
            TopolowError::Invalid(_) => 3,
            TopolowError::Numeric(_) | TopolowError::Io(_) => 4,
        }
    }
}

impl From<csv::Error> for TopolowError {
    fn from(e: csv::Error) -> Self {
        // A missing or unreadable file is an i/o failure, not bad syntax.
        let message = e.to_string();
        match e.into_kind() {
            csv::ErrorKind::Io(io) => TopolowError::Io(io),
            _ => TopolowError::parse("csv", message),
        }
    }
}

impl From<serde_json::Error> for TopolowError {
    fn from(e: serde_json::Error) -> Self {
        TopolowError::parse("json", e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TopolowError>;

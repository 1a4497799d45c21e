use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report.
///
/// [`Error::kind`] gives a stable, machine-readable class name that the CLI
/// prints as `error.kind=<kind>`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("lookup index {index} out of range for table with {rows} rows")]
    Lookup { index: usize, rows: usize },

    #[error("unknown speaker `{0}`")]
    UnknownSpeaker(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("checksum mismatch: {0}")]
    Checksum(String),

    #[error("bundle validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("capability unavailable: {0}")]
    Capability(&'static str),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("config json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Shape(_) => "shape",
            Error::Length { .. } => "length",
            Error::Config { .. } => "config",
            Error::Lookup { .. } => "lookup",
            Error::UnknownSpeaker(_) => "unknown_speaker",
            Error::UnsupportedFormat(_) => "unsupported_format",
            Error::Format(_) => "format",
            Error::UnsupportedVersion(_) => "unsupported_version",
            Error::Checksum(_) => "checksum",
            Error::Validation(_) => "validation",
            Error::Capability(_) => "capability",
            Error::Io(_) => "io",
            Error::Json(_) => "config",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    External,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 1,
            ErrorClass::Data => 2,
            ErrorClass::External => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line} (byte offset {offset}): {message}")]
    MalformedRecord {
        line: usize,
        offset: u64,
        message: String,
    },

    #[error("duplicate document id `{id}` at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("issue_format: {0}")]
    IssueFormat(String),

    #[error("span_conflict: {0}")]
    SpanConflict(String),

    #[error("fim_too_short: {len} chars, need at least {min}")]
    FimTooShort { len: usize, min: usize },

    #[error("fim_malformed: {0}")]
    FimMalformed(String),

    #[error(
        "lsh geometry: {bands} bands x {rows} rows does not cover a signature of length {len}"
    )]
    LshGeometry {
        bands: usize,
        rows: usize,
        len: usize,
    },

    #[error("scanner_unavailable: {0}")]
    ScannerUnavailable(String),

    #[error("tokenizer_unavailable: {0}")]
    TokenizerUnavailable(String),

    #[error("missing manifest: {0}")]
    MissingManifest(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::LshGeometry { .. } => ErrorClass::Config,
            Error::ScannerUnavailable(_) | Error::TokenizerUnavailable(_) => ErrorClass::External,
            _ => ErrorClass::Data,
        }
    }
}

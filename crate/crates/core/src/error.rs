use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {source}")]
    AtLine { line: usize, source: Box<Error> },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// A record violates one of its construction invariants.
    #[error("question `{id}`: field `{field}`: {message}")]
    Invariant {
        id: String,
        field: String,
        message: String,
    },

    #[error("duplicate question id `{0}`")]
    DuplicateId(String),

    #[error("confidence level {0} is not within 1e-9 of the 0.1 grid")]
    OffGrid(f64),

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("question `{id}` has no {what}")]
    Missing { id: String, what: &'static str },

    #[error("question `{id}`: samples do not match scheme {scheme}: {message}")]
    SchemeMismatch {
        id: String,
        scheme: &'static str,
        message: String,
    },

    #[error("dataset has no LLM records")]
    NoLlmData,

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("degenerate {axis} span: {low} .. {high}")]
    DegenerateSpan {
        axis: &'static str,
        low: f64,
        high: f64,
    },

    #[error("golden trade-off gain {0:e} is too small to form a ratio")]
    DegenerateGolden(f64),

    #[error("expected {expected} samples, found {found}")]
    SampleCount { expected: usize, found: usize },

    #[error("non-finite loss input `{0}`")]
    NonFinite(&'static str),

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn invariant(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invariant {
            id: String::new(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a question id and a field prefix to an invariant error raised by a nested record.
    pub(crate) fn in_question(self, id: &str, prefix: &str) -> Self {
        match self {
            Error::Invariant { field, message, .. } => Error::Invariant {
                id: id.to_owned(),
                field: if prefix.is_empty() {
                    field
                } else {
                    format!("{prefix}.{field}")
                },
                message,
            },
            Error::OffGrid(v) => Error::Invariant {
                id: id.to_owned(),
                field: format!("{prefix}.confidence_level"),
                message: format!("{v} is not within 1e-9 of the 0.1 grid"),
            },
            other => other,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },

    #[error("line {line}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate key {0:?}")]
    DuplicateKey(String),

    #[error("missing embedding for {0:?}")]
    MissingKey(String),

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("unknown verb {0:?}")]
    UnknownVerb(String),

    #[error("no overlap with vocabulary")]
    NoVocabularyOverlap,

    #[error("degenerate marginals")]
    DegenerateMarginals,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }
}

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A record in a line-oriented or JSON input could not be accepted.
    #[error("{source_name}:{line}: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("cannot embed empty text")]
    EmptyText,

    #[error("no precomputed embedding for text {0:?}")]
    LookupMiss(String),

    #[error("embedding service request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("embedding service protocol error: {0}")]
    Protocol(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector has zero norm")]
    ZeroNorm,

    #[error("vector contains a non-finite value")]
    NonFinite,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("question template {0:?} must contain the placeholder {{trait}} exactly once")]
    Template(String),

    #[error("cannot replace {requested} entries with unanswerable questions: only {available} are replaceable")]
    InsufficientReplaceable { requested: usize, available: usize },

    #[error("answer of entry {id:?} does not match its context at offset {start}: {text:?}")]
    AnswerIntegrity {
        id: String,
        start: usize,
        text: String,
    },

    #[error("invalid SQuAD dataset: {0}")]
    Schema(String),

    #[error("missing prediction for question id {0:?}")]
    MissingPrediction(String),

    #[error("prediction for unknown question id {0:?}")]
    ExtraPrediction(String),

    #[error("reference set is empty")]
    EmptyReferences,

    #[error("dataset contains no questions")]
    EmptyDataset,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

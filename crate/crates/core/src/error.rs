use thiserror::Error;

use crate::datamodel::Modality;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("ragged row at line {line}: expected {expected} cells, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: non-numeric cell {cell:?}")]
    NonNumeric { line: usize, cell: String },

    #[error("line {line}: expected {expected} cells, found {found}")]
    WrongArity {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: timestamp {timestamp} precedes the previous frame")]
    NonMonotoneTimestamp { line: usize, timestamp: f64 },

    #[error("line {line}: malformed time: {message}")]
    MalformedTime { line: usize, message: String },

    #[error("line {line}: missing field {field}")]
    MissingField { line: usize, field: &'static str },

    #[error("line {line}: valence {value} for {term:?} outside [-5, 5]")]
    ValenceOutOfRange {
        line: usize,
        term: String,
        value: i64,
    },

    #[error("line {line}: duplicate session id {session_id:?}")]
    DuplicateSession { line: usize, session_id: String },

    #[error("line {line}: phq8 {value} outside [0, 24]")]
    Phq8OutOfRange { line: usize, value: i64 },

    #[error("session {0:?} has no phq8 label")]
    MissingLabel(String),

    #[error("session {session_id:?} has no {modality} features")]
    MissingFeatures {
        session_id: String,
        modality: Modality,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Invalid(String),

    #[error("zero-duration transcript")]
    ZeroDuration,

    #[error("model version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("corrupt model stream: {0}")]
    Corrupt(String),

    #[error("fusion strategy mismatch: {0}")]
    StrategyMismatch(String),

    #[error("missing split: {0}")]
    MissingSplit(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The 1-based input line the error refers to, for parse failures.
    pub fn line(&self) -> Option<usize> {
        match self {
            Error::Parse { line, .. }
            | Error::RaggedRow { line, .. }
            | Error::NonNumeric { line, .. }
            | Error::WrongArity { line, .. }
            | Error::NonMonotoneTimestamp { line, .. }
            | Error::MalformedTime { line, .. }
            | Error::MissingField { line, .. }
            | Error::ValenceOutOfRange { line, .. }
            | Error::DuplicateSession { line, .. }
            | Error::Phq8OutOfRange { line, .. } => Some(*line),
            _ => None,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreedyError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("element has a non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("space not uniformly smooth: p = {p} (need 1 < p < inf)")]
    NotUniformlySmooth { p: f64 },

    #[error("norming functional of zero undefined")]
    ZeroNorming,

    #[error("empty dictionary")]
    EmptyDictionary,

    #[error("dictionary does not span: rank {rank} < dimension {n}")]
    DictionaryDoesNotSpan { rank: usize, n: usize },

    #[error("dictionary element {index} has norm {norm} > 1")]
    ElementTooLarge { index: usize, norm: f64 },

    #[error("no bracket found")]
    NoBracket,

    #[error("invalid interval: lo = {lo} > hi = {hi}")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse {field}: {message}")]
    Parse { field: String, message: String },

    #[error("unknown bound id `{0}`")]
    UnknownBound(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("report incomplete: {0}")]
    IncompleteReport(String),
}

impl GreedyError {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        GreedyError::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl GreedyError {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        GreedyError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, GreedyError>;

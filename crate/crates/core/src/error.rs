use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("out of extent: {0}")]
    OutOfExtent(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty sequence")]
    EmptySequence,

    #[error("sequence length {len} exceeds the maximum of {max}")]
    LengthExceeded { len: usize, max: usize },

    #[error("training corpus is empty")]
    EmptyCorpus,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid value: {0}")]
    Value(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by bad input or configuration rather than the
    /// environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

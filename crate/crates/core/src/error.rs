use thiserror::Error;

#[derive(Debug, Error)]
pub enum NemoError {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidParam { key: String, reason: String },

    #[error("unknown area `{0}`")]
    UnknownArea(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid assembly in area `{area}`: {reason}")]
    InvalidAssembly { area: String, reason: String },

    #[error("no fiber from `{src}` into `{dst}`")]
    MissingFiber { src: String, dst: String },

    #[error("word {0} is not in the lexicon")]
    UnknownWord(usize),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NemoError {
    pub(crate) fn param(key: impl Into<String>, reason: impl Into<String>) -> Self {
        NemoError::InvalidParam {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = NemoError> = std::result::Result<T, E>;

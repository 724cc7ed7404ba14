use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: invalid JSON: {source}")]
    Json {
        location: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{location}: {message}")]
    Record { location: String, message: String },
    #[error("duplicate utterance_id {0:?}")]
    DuplicateId(String),
    #[error("unknown follow-up answer {0:?} (expected Yes or No)")]
    UnknownAnswer(String),
    #[error("unknown class label {0:?}")]
    UnknownLabel(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot generate instance from {parent_id}: {reason}")]
    Augment { parent_id: String, reason: String },
    #[error("clause text is empty")]
    EmptyClause,
    #[error("prediction alignment: {0}")]
    Alignment(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn record(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Record {
            location: location.into(),
            message: message.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::clients::ClientError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed disfluency tags: {0}")]
    MalformedTag(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown source corpus `{0}`")]
    UnknownSource(String),

    #[error("invalid {source_name} record: {reason}")]
    InvalidRecord { source_name: String, reason: String },

    #[error("word error rate is undefined for an empty reference")]
    EmptyReference,

    #[error(transparent)]
    Client(#[from] ClientError),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

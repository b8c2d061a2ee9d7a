use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate in position of robot {0}")]
    NonFinitePosition(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config: {key}: {reason}")]
    Config { key: String, reason: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("malformed message: {0}")]
    Decode(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid scenario {id}: {reason}")]
    ScenarioInvalid { id: String, reason: String },
    #[error("input data error: {0}")]
    Input(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("episode failed ({context}): {source}")]
    Episode {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Core(#[from] mbappe_core::Error),
}

impl Error {
    pub fn read(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Read {
            path: path.into(),
            source,
        }
    }

    pub fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Write {
            path: path.into(),
            source,
        }
    }

    pub fn scenario(id: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ScenarioInvalid {
            id: id.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 2 usage/config, 3 input data, 4 episode failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Core(mbappe_core::Error::Configuration(_)) => 2,
            Error::ScenarioInvalid { .. } | Error::Input(_) | Error::Read { .. } => 3,
            Error::Core(mbappe_core::Error::MalformedInput(_)) => 3,
            Error::Core(mbappe_core::Error::PredictionUnavailable(_)) => 3,
            Error::Write { .. } => 4,
            Error::Episode { .. } | Error::Runtime(_) | Error::Core(_) => 4,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot step a terminal state (t = {t}, horizon = {horizon})")]
    TerminalState { t: usize, horizon: usize },

    #[error("contract share {0} outside [0, 1]")]
    ContractOutOfRange(f64),

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("non-finite {learner} loss at iteration {iteration}: {detail}")]
    NonFiniteLoss {
        learner: String,
        iteration: usize,
        detail: String,
    },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("invalid tabular game: {0}")]
    TabularGame(String),

    #[error("schema version mismatch in {path}: found {found}, expected {expected}")]
    SchemaVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("unexpected log columns in {path}: {found}")]
    LogHeader { path: PathBuf, found: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} is outside the support of the {family} family")]
    Domain { family: &'static str, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("exact enumeration infeasible: {0}")]
    EnumerationBound(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("training diverged at epoch {epoch}: non-finite values in {group}")]
    Divergence { epoch: usize, group: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("empty feature selection: no {0} units")]
    EmptySelection(String),

    #[error("view dimension {0} is not a perfect square")]
    NonSquare(usize),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("gradient check failed: {0}")]
    CheckFailed(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } | Error::Checkpoint(_) => 3,
            Error::Divergence { .. } => 4,
            Error::CheckFailed(_) => 5,
            _ => 2,
        }
    }
}

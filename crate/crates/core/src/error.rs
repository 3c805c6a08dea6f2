use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BeamError>;

#[derive(Debug, Error)]
pub enum BeamError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("column {index} is constant after centering")]
    ConstantColumn { index: usize },

    #[error("need at least 3 samples, got {n}")]
    InsufficientSamples { n: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Input {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BeamError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        BeamError::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        BeamError::Numerical(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        BeamError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BeamError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            BeamError::Input { .. }
            | BeamError::Io { .. }
            | BeamError::ConstantColumn { .. }
            | BeamError::InsufficientSamples { .. } => 2,
            BeamError::Config(_) | BeamError::Domain(_) => 3,
            BeamError::Numerical(_) => 4,
        }
    }
}

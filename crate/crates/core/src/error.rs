use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while building models, compiling programs or reading files.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("cycle detected in raw skeleton at joint {0}")]
    Cycle(usize),

    #[error("joint {joint} declares {count} rotational DOF (at most 3 allowed)")]
    TooManyDofs { joint: usize, count: usize },

    #[error("axis {axis:?} of joint {joint} is not normalizable")]
    DegenerateAxis { joint: usize, axis: [f64; 3] },

    #[error("axis {0:?} is not unit length")]
    NonUnitAxis([f64; 3]),

    #[error("parameter vector has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("skeleton is not one-DOF normalized: {0}")]
    NotNormalized(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid conic program: {0}")]
    InvalidProgram(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use crate::ntensor::NTensorError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("axis {axis} out of range for a {dim}-d grid")]
    InvalidAxis { axis: usize, dim: usize },

    #[error("invalid model spec: {0}")]
    InvalidModel(String),

    #[error("cannot parse feature `{input}` at byte {pos}: {msg}")]
    Parse {
        input: String,
        pos: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("solver blow-up at storage step {step}: max |u| = {max_abs:e} exceeds bound {bound:e}")]
    BlowUp { step: usize, max_abs: f64, bound: f64 },

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid dataset at {path}: {msg}")]
    Dataset { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    NTensor(#[from] NTensorError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics themselves (blow-up, non-finite values),
    /// as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::BlowUp { .. } | Error::NonFinite(_) => true,
            Error::Sample { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// True for problems with files on disk (missing, corrupt, inconsistent).
    pub fn is_data(&self) -> bool {
        match self {
            Error::Dataset { .. } | Error::Io { .. } | Error::NTensor(_) | Error::Json(_) => true,
            Error::Sample { source, .. } => source.is_data(),
            _ => false,
        }
    }
}

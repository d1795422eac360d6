//! Fourier neural operator with hand-written reverse-mode gradients, Adam
//! training on regularity-structure features, checkpoints and evaluation at
//! other resolutions.

pub mod adam;
pub mod config;
pub mod data;
pub mod fno;
pub mod loss;
pub mod params;
pub mod train;

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use adam::{Adam, AdamConfig};
pub use config::{Activation, FnoConfig};
pub use data::{InputMode, InputSpec, Normalizer, PreparedSet};
pub use fno::{Fno, GridPlan};
pub use loss::{relative_l2, relative_l2_grad};
pub use params::FnoParams;
pub use train::{
    evaluate, evaluate_checkpoint, split_indices, train, EvalReport, Predictor, PredictorMeta, TrainConfig, TrainHistory,
    TrainOutcome,
};

pub type Result<T, E = OpError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum OpError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint config mismatch: expected {expected:?}, found {found:?}")]
    ConfigMismatch {
        expected: Box<FnoConfig>,
        found: Box<FnoConfig>,
    },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite {0}")]
    NonFinite(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Core(#[from] nors_core::Error),

    #[error(transparent)]
    NTensor(#[from] nors_core::ntensor::NTensorError),
}

impl OpError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OpError::Io {
            path: path.into(),
            source,
        }
    }

    /// Divergence or non-finite values during training or simulation.
    pub fn is_numerical(&self) -> bool {
        match self {
            OpError::NonFinite(_) => true,
            OpError::Core(e) => e.is_numerical(),
            _ => false,
        }
    }

    /// Missing, corrupt or inconsistent files.
    pub fn is_data(&self) -> bool {
        match self {
            OpError::Checkpoint(_)
            | OpError::ConfigMismatch { .. }
            | OpError::Io { .. }
            | OpError::Json { .. }
            | OpError::NTensor(_) => true,
            OpError::Core(e) => e.is_data(),
            _ => false,
        }
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| OpError::Json {
        path: path.into(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| OpError::io(path, e))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| OpError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| OpError::Json {
        path: path.into(),
        source,
    })
}

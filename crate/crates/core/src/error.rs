use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("feature {feature} has zero spread; {context}")]
    ZeroSpread { feature: usize, context: &'static str },

    #[error("no counterfactual found within radius {max_radius}")]
    NoCounterfactual { max_radius: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("degenerate neighbour distances: {0}")]
    DegenerateDistances(String),

    #[error("{d} features exceed the enumeration cap of {cap}; use the sampled estimator")]
    EnumerationCap { d: usize, cap: usize },

    #[error("training diverged at epoch {epoch} (loss is not finite); lower the learning rate")]
    Diverged { epoch: usize },

    #[error("dataset has no labels")]
    Unlabeled,

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("io error on {path}: {source}")]
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

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

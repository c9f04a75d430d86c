use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, TinctError>;

#[derive(Debug, Error)]
pub enum TinctError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed raster {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{path} is {found_w}x{found_h}, expected {expected_w}x{expected_h}")]
    DimensionMismatch {
        path: PathBuf,
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },

    #[error("image dimensions disagree: {0}")]
    ShapeMismatch(String),

    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("all abscissas coincide; the curve cannot be fitted")]
    DegenerateData,

    #[error("no known-color pixels to seed the Voronoi decomposition")]
    NoSeeds,

    #[error("non-finite or runaway value at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("curve is not invertible: {0}")]
    NotInvertible(String),
}

impl TinctError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TinctError::Io {
            path: path.into(),
            source,
        }
    }
}

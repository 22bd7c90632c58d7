use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped so the command-line frontend can map them onto exit
/// codes: input/data problems versus estimation/model problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("{what}: need at least {required}, have {available}")]
    InsufficientHistory {
        what: String,
        required: usize,
        available: usize,
    },

    #[error("series {series}: timestamps not increasing at {at}")]
    NonMonotoneTimestamps { series: String, at: String },

    #[error("series {series}: gap between {after} and {before}")]
    Gap {
        series: String,
        after: String,
        before: String,
    },

    #[error("{file}: duplicate row {row} for key {key}")]
    Duplicate { file: String, row: usize, key: String },

    #[error("{what}: value {value} outside the admissible range")]
    OutOfRange { what: String, value: f64 },

    #[error("{file}: schema error: {detail}")]
    Schema { file: String, detail: String },

    #[error("series {series}: unit {found} does not match expected {expected}")]
    UnitMismatch {
        series: String,
        expected: String,
        found: String,
    },

    #[error("{side} curve is not monotone at grid index {index}")]
    NonMonotoneCurve { side: String, index: usize },

    #[error("model error: {0}")]
    Model(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the model artifacts or the estimation
    /// itself rather than by the input data.
    pub fn is_model_error(&self) -> bool {
        matches!(self, Error::Model(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("label column `{0}` not present in header")]
    MissingLabelColumn(String),

    #[error("non-numeric value `{value}` at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("label not binary: `{value}` at row {row} (expected 0 or 1)")]
    LabelNotBinary { row: usize, value: String },

    #[error("single-class dataset: every label is {0}")]
    SingleClass(u8),

    #[error("too few samples: {0} (need at least 2)")]
    TooFewSamples(usize),

    #[error("dataset has no feature columns")]
    NoFeatures,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty input")]
    Empty,

    #[error("infinite divergence: observed mass {observed} where expected mass is zero (component {index})")]
    InfiniteDivergence { index: usize, observed: f64 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("marginal violation: {0}")]
    Marginal(String),

    #[error("class ratio r1 = {0} exceeds 1/2; canonicalize the labels first")]
    NotCanonical(f64),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

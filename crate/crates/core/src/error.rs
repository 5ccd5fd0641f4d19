use std::path::PathBuf;

use thiserror::Error;

use crate::model::ClassId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("binary problem has only one label sign; need at least one +1 and one -1")]
    SingleClassInput,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("class {0} is already present in the model")]
    DuplicateClass(ClassId),

    #[error("class {0} is not present in the model")]
    UnknownClass(ClassId),

    #[error("class {class} has {size} examples but {required} are required")]
    ClassTooSmall {
        class: ClassId,
        size: usize,
        required: usize,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },

    #[error("non-numeric feature at row {row}, column {column}: {value:?}")]
    NonNumericFeature {
        row: usize,
        column: String,
        value: String,
    },

    #[error("file {0} contains no data rows")]
    EmptyFile(PathBuf),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("solver did not converge within {iterations} iterations (violation {violation:e})")]
    NonConvergence { iterations: usize, violation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("wrong paradigm: model is {found}, operation expects {expected}")]
    WrongParadigm {
        expected: &'static str,
        found: &'static str,
    },

    #[error("unsupported model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

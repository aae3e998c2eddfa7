use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MedError>;

#[derive(Debug, Error)]
pub enum MedError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dual variable {index} = {value} outside the box [0, {upper})")]
    BoxViolation {
        index: usize,
        value: f64,
        upper: f64,
    },

    #[error("equality constraint violated: residual {residual:e}")]
    Infeasible { residual: f64 },

    #[error("mode mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: String, found: String },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl MedError {
    /// Process exit code: 1 for user/input errors, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            MedError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

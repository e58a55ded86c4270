use std::fmt;

use thiserror::Error;

/// Which axis of a matrix a statistic or polish refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Row,
    Col,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Col => f.write_str("column"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error(
        "matrix is {rows}x{cols}; successive standardization needs at least 3 rows and 3 columns"
    )]
    DimensionTooSmall { rows: usize, cols: usize },

    #[error("{axis} {index} has zero standard deviation")]
    ZeroVariance { axis: Axis, index: usize },

    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("invalid matrix shape: {rows}x{cols} with {len} entries")]
    InvalidShape {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix has zero Frobenius norm")]
    ZeroMatrix,

    #[error("need at least {needed} records to fit a rate, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("step size at iteration {iteration} is zero; rate is undefined")]
    NonpositiveStep { iteration: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = NormError> = std::result::Result<T, E>;

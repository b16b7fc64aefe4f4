use alloc::string::String;

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty matrix: {rows} rows x {cols} columns (need at least 1 x 1)")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("matrix data length {len} does not match shape {rows} x {cols}")]
    ShapeData { rows: usize, cols: usize, len: usize },

    #[error("ragged rows: row {row} has {found} entries, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("dimension mismatch: source has {source_dim} columns, target has {target_dim}")]
    DimensionMismatch { source_dim: usize, target_dim: usize },

    #[error("shape mismatch: {what}")]
    ShapeMismatch { what: String },

    #[error("non-finite moment in dimension {dim} at order {order}; consider standardizing the inputs")]
    NonFiniteMoment { dim: usize, order: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("too few samples: {found} rows, need at least {needed} ({context})")]
    TooFewSamples {
        found: usize,
        needed: usize,
        context: &'static str,
    },

    #[error("label {label} at row {row} is out of range for {classes} classes")]
    LabelOutOfRange { row: usize, label: usize, classes: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}: non-finite {quantity}")]
    Diverged {
        epoch: usize,
        batch: usize,
        quantity: &'static str,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

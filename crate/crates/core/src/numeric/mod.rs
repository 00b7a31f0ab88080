//! Dense matrix builders, products and the eigenvalue solver.

mod eigen;
mod matrix;

pub use eigen::{eigenvalues, Eigenvalue, Spectrum};
pub use matrix::{build_fill, build_tridiag, dot3, matmul, Matrix};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("matrix order must be positive, got {0}")]
    NonPositiveOrder(i64),
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("rows have unequal lengths")]
    Ragged,
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
    #[error("value of kind {0} is not a numeric matrix")]
    NotAMatrix(&'static str),
    #[error("cannot multiply {}x{} by {}x{}", left.0, left.1, right.0, right.1)]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix is {rows}x{cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge within {iterations} sweeps")]
    NoConvergence { iterations: usize },
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be nonempty, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("data length {len} does not match shape {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },

    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("kernel entry for pair ({i}, {j}) is not finite")]
    NonFiniteKernel { i: usize, j: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("k = {k} exceeds {what} = {limit}")]
    KTooLarge { k: usize, limit: usize, what: &'static str },

    #[error(
        "curvature {curvature:e} along the descent direction is negative at iteration {iteration} \
         (gram scale {scale:e}); the kernel matrix is not positive semidefinite"
    )]
    NegativeCurvature { curvature: f64, scale: f64, iteration: usize },
}

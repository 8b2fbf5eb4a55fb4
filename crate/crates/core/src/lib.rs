//! Exemplar selection by greedy Frank-Wolfe over a group-lasso ball.
//!
//! The solver picks `k` columns of a data matrix whose span best reconstructs
//! every column, growing one nonzero row of the coefficient matrix per
//! iteration. Baseline selectors (random, k-medoids, pivoted QR) and the
//! synthetic benchmark generators live alongside it.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod experiments;
pub mod io;
pub mod matrix;
pub mod solver;

pub use error::{Error, Result};
pub use matrix::{Centering, DenseMatrix, KernelSpec, PreprocessConfig, RowSparseMatrix};
pub use solver::{solve, solve_gram, GapThreshold, NormKind, SelectionResult, SolverConfig, Status};

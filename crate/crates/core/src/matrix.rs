//! Dense and row-sparse matrices, preprocessing and Gram/kernel construction.
//!
//! The data matrix `A` is `d x n` with one data point per column, stored
//! column-major so that a data point is a contiguous slice.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows of a [`RowSparseMatrix`] whose l2 norm falls to this value or below are evicted.
pub const DEFAULT_EPSILON_ROW: f64 = 1e-12;

/// Column-major dense matrix of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch { rows, cols, len: data.len() });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos % rows, col: pos / rows });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch { rows, cols, len: data.len() });
        }
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                out[c * rows + r] = data[r * cols + c];
            }
        }
        Self::from_col_major(rows, cols, out)
    }

    /// Builds a matrix from a slice of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(nrows * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(Error::ShapeMismatch { rows: nrows, cols: ncols, len: r.len() });
            }
            flat.extend_from_slice(r);
        }
        Self::from_row_major(nrows, ncols, &flat)
    }

    /// Builds a matrix whose columns are the given slices (one data point each).
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(nrows * ncols);
        for c in columns {
            if c.len() != nrows {
                return Err(Error::ShapeMismatch { rows: nrows, cols: ncols, len: c.len() });
            }
            flat.extend_from_slice(c);
        }
        Self::from_col_major(nrows, ncols, flat)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[col * self.rows + row] = value;
    }

    #[inline]
    pub fn col(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    /// Column-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Submatrix made of the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for &j in indices {
            data.extend_from_slice(self.col(j));
        }
        Self { rows: self.rows, cols: indices.len(), data }
    }

    /// Plain triple-loop product; used by tests and small diagnostics.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { left: self.cols, right: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for c in 0..other.cols {
            for k in 0..self.cols {
                let b = other.get(k, c);
                if b == 0.0 {
                    continue;
                }
                let a = self.col(k);
                let dst = out.col_mut(c);
                for r in 0..a.len() {
                    dst[r] += a[r] * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// `||self - other||_F / max(||other||_F, tiny)`.
    pub fn relative_frobenius_error(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let diff: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        diff / other.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::NonFinite { row: pos % self.rows, col: pos / self.rows }),
            None => Ok(()),
        }
    }
}

/// Which mean is removed from the data before forming the Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    None,
    /// Each data point (column) becomes zero-mean over its features.
    #[default]
    PerDatapoint,
    /// Each feature (row) becomes zero-mean across data points.
    PerFeature,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    #[default]
    Linear,
    /// `exp(-||a_i - a_j||^2 / (2 width^2))`
    Rbf { width: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { width } if width > 0.0 && width.is_finite() => Ok(()),
            KernelSpec::Rbf { width } => {
                Err(Error::InvalidConfig(format!("rbf width must be positive, got {width}")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub centering: Centering,
    /// Weight of the translational-invariance penalty; 0 disables it.
    pub eta: f64,
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta must be >= 0, got {}", self.eta)));
        }
        Ok(())
    }
}

pub fn center(a: &DenseMatrix, mode: Centering) -> DenseMatrix {
    let mut out = a.clone();
    match mode {
        Centering::None => {}
        Centering::PerDatapoint => {
            for j in 0..out.cols {
                let col = out.col_mut(j);
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                col.iter_mut().for_each(|v| *v -= mean);
            }
        }
        Centering::PerFeature => {
            let mut means = vec![0.0; out.rows];
            for j in 0..out.cols {
                for (m, v) in means.iter_mut().zip(out.col(j)) {
                    *m += v;
                }
            }
            let n = out.cols as f64;
            means.iter_mut().for_each(|m| *m /= n);
            for j in 0..out.cols {
                for (v, m) in out.col_mut(j).iter_mut().zip(&means) {
                    *v -= m;
                }
            }
        }
    }
    out
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        for l in 0..4 {
            let d = a[i + l] - b[i + l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        let d = a[i] - b[i];
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Pairwise squared Euclidean distances between the columns of `a`.
pub fn pairwise_sq_distances(a: &DenseMatrix) -> DenseMatrix {
    let n = a.cols;
    let mut out = DenseMatrix::zeros(n, n);
    out.data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        let aj = a.col(j);
        for (i, v) in col.iter_mut().enumerate() {
            *v = squared_distance(a.col(i), aj);
        }
    });
    out
}

/// Forms the `n x n` kernel matrix of the (already centered) columns of `a`,
/// plus `eta^2` on every entry for the implicit augmentation row `eta 1^T`.
///
/// Each column of the result is computed independently with a fixed
/// summation order, so the output does not depend on the thread count.
pub fn build_gram(a: &DenseMatrix, kernel: KernelSpec, eta: f64) -> Result<DenseMatrix> {
    kernel.validate()?;
    let n = a.cols;
    let shift = eta * eta;
    let mut g = DenseMatrix::zeros(n, n);
    match kernel {
        KernelSpec::Linear => {
            g.data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
                let aj = a.col(j);
                for (i, v) in col.iter_mut().enumerate() {
                    *v = dot(a.col(i), aj) + shift;
                }
            });
        }
        KernelSpec::Rbf { width } => {
            let scale = 1.0 / (2.0 * width * width);
            g.data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
                let aj = a.col(j);
                for (i, v) in col.iter_mut().enumerate() {
                    *v = (-squared_distance(a.col(i), aj) * scale).exp() + shift;
                }
            });
        }
    }
    for j in 0..n {
        for i in 0..j {
            let avg = 0.5 * (g.get(i, j) + g.get(j, i));
            g.set(i, j, avg);
            g.set(j, i, avg);
        }
    }
    if let Err(Error::NonFinite { row, col }) = g.check_finite() {
        return Err(Error::NonFiniteKernel { i: row, j: col });
    }
    Ok(g)
}

/// Square matrix stored as an ordered map of nonzero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSparseMatrix {
    dim: usize,
    rows: BTreeMap<usize, Vec<f64>>,
    insertion_order: Vec<usize>,
    seen: BTreeSet<usize>,
    epsilon_row: f64,
}

impl RowSparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self::with_epsilon(dim, DEFAULT_EPSILON_ROW)
    }

    pub fn with_epsilon(dim: usize, epsilon_row: f64) -> Self {
        Self {
            dim,
            rows: BTreeMap::new(),
            insertion_order: Vec::new(),
            seen: BTreeSet::new(),
            epsilon_row,
        }
    }

    /// A matrix with the single row `index` set to `values`.
    pub fn single_row(dim: usize, index: usize, values: Vec<f64>) -> Result<Self> {
        let mut m = Self::zeros(dim);
        m.add_scaled_row(index, 1.0, &values)?;
        Ok(m)
    }

    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch { left: m.rows(), right: m.cols() });
        }
        let mut out = Self::zeros(m.rows());
        for i in 0..m.rows() {
            let row: Vec<f64> = (0..m.cols()).map(|j| m.get(i, j)).collect();
            out.add_scaled_row(i, 1.0, &row)?;
        }
        Ok(out)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon_row(&self) -> f64 {
        self.epsilon_row
    }

    pub fn row(&self, index: usize) -> Option<&[f64]> {
        self.rows.get(&index).map(Vec::as_slice)
    }

    /// Stored rows in ascending index order.
    pub fn iter_rows(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows.iter().map(|(&i, r)| (i, r.as_slice()))
    }

    pub fn row_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn nnz_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row indices in the order they were first activated, including rows evicted since.
    pub fn insertion_order(&self) -> &[usize] {
        &self.insertion_order
    }

    pub fn row_norm(&self, index: usize) -> f64 {
        self.row(index).map_or(0.0, |r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Multiplies every stored row by `c`, evicting rows that become negligible.
    pub fn scale(&mut self, c: f64) {
        if c == 0.0 {
            self.rows.clear();
            return;
        }
        for r in self.rows.values_mut() {
            r.iter_mut().for_each(|v| *v *= c);
        }
        self.evict_small();
    }

    /// `row[index] += c * values`.
    pub fn add_scaled_row(&mut self, index: usize, c: f64, values: &[f64]) -> Result<()> {
        if index >= self.dim {
            return Err(Error::DimensionMismatch { left: index, right: self.dim });
        }
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch { left: values.len(), right: self.dim });
        }
        let dim = self.dim;
        let row = self.rows.entry(index).or_insert_with(|| vec![0.0; dim]);
        for (r, v) in row.iter_mut().zip(values) {
            *r += c * v;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= self.epsilon_row {
            self.rows.remove(&index);
        } else if self.seen.insert(index) {
            self.insertion_order.push(index);
        }
        Ok(())
    }

    /// In-place `self += gamma * d`.
    pub fn axpy(&mut self, gamma: f64, d: &RowSparseMatrix) -> Result<()> {
        if self.dim != d.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: d.dim });
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidConfig(format!("axpy scale must be finite, got {gamma}")));
        }
        for (i, r) in d.iter_rows() {
            self.add_scaled_row(i, gamma, r)?;
        }
        Ok(())
    }

    /// `X - Y`, used for the descent direction `S - X`.
    pub fn difference(&self, other: &RowSparseMatrix) -> Result<RowSparseMatrix> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.dim.max(1), self.dim.max(1));
        for (i, r) in self.iter_rows() {
            for (j, v) in r.iter().enumerate() {
                out.set(i, j, *v);
            }
        }
        out
    }

    fn evict_small(&mut self) {
        let eps = self.epsilon_row;
        self.rows.retain(|_, r| r.iter().map(|v| v * v).sum::<f64>().sqrt() > eps);
    }
}

/// Returns `x + gamma * d`.
pub fn rowsparse_axpy(
    x: &RowSparseMatrix,
    gamma: f64,
    d: &RowSparseMatrix,
) -> Result<RowSparseMatrix> {
    let mut out = x.clone();
    out.axpy(gamma, d)?;
    Ok(out)
}

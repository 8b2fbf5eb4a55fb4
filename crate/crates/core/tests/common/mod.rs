#![allow(dead_code)]

use fwsr::{DenseMatrix, RowSparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_col_major(rows, cols, data).unwrap()
}

/// `||A X - A||_F^2 + eta^2 ||X^T 1 - 1||^2` evaluated from `A` directly.
pub fn dense_objective(a: &DenseMatrix, x: &DenseMatrix, eta: f64) -> f64 {
    let ax = a.matmul(x).unwrap();
    let fit: f64 = ax.as_slice().iter().zip(a.as_slice()).map(|(p, q)| (p - q).powi(2)).sum();
    let n = x.cols();
    let affine: f64 = (0..n)
        .map(|j| {
            let col_sum: f64 = x.col(j).iter().sum();
            (col_sum - 1.0).powi(2)
        })
        .sum();
    fit + eta * eta * affine
}

/// `X + gamma D` for dense matrices of the same shape.
pub fn add_scaled(x: &DenseMatrix, gamma: f64, d: &DenseMatrix) -> DenseMatrix {
    let data = x.as_slice().iter().zip(d.as_slice()).map(|(p, q)| p + gamma * q).collect();
    DenseMatrix::from_col_major(x.rows(), x.cols(), data).unwrap()
}

pub fn sub(x: &DenseMatrix, y: &DenseMatrix) -> DenseMatrix {
    add_scaled(x, -1.0, y)
}

pub fn inner(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| p * q).sum()
}

/// Minimizer of a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares line through `(i, ys[i])`; returns `(slope, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Row-sparse matrix as dense, for use with the dense oracles.
pub fn dense(x: &RowSparseMatrix) -> DenseMatrix {
    x.to_dense()
}

/// Mixed norm `sum_i ||row_i||_q` of a dense matrix.
pub fn mixed_norm(x: &DenseMatrix, q: fwsr::NormKind) -> f64 {
    let t = x.transpose();
    (0..x.rows()).map(|i| q.norm(t.col(i))).sum()
}

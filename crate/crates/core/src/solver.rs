//! Greedy Frank-Wolfe solver for row-sparse self-representation.
//!
//! Minimizes `f(X) = ||A X - A||_F^2 + eta^2 ||X^T 1 - 1||^2` over the group-lasso
//! ball `sum_i ||X^(i)||_q <= beta`, touching the data only through the Gram
//! matrix `K` (which already carries the `eta^2` shift). Each iteration costs
//! `O(n^2)`: the running product `K X` is updated by a scale plus a rank-one
//! term, and every other quantity is evaluated over the nonzero rows of `X`.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    build_gram, center, Centering, DenseMatrix, KernelSpec, RowSparseMatrix, DEFAULT_EPSILON_ROW,
};

/// The `q` of the group-lasso constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    One,
    #[default]
    Two,
    Infinity,
}

impl NormKind {
    /// Norm of `v` in the dual of this norm (the `p` with `1/p + 1/q = 1`).
    pub fn dual_norm(self, v: &[f64]) -> f64 {
        match self {
            NormKind::One => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormKind::Two => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Infinity => v.iter().map(|x| x.abs()).sum(),
        }
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormKind::One => v.iter().map(|x| x.abs()).sum(),
            NormKind::Two => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Infinity => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

/// Frank-Wolfe gap threshold below which the solver reports convergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum GapThreshold {
    /// Multiple of the gap at the first iteration.
    Relative(f64),
    Absolute(f64),
}

impl Default for GapThreshold {
    fn default() -> Self {
        GapThreshold::Relative(1e-7)
    }
}

impl GapThreshold {
    fn resolve(self, initial_gap: f64) -> f64 {
        match self {
            GapThreshold::Relative(r) => r * initial_gap,
            GapThreshold::Absolute(a) => a,
        }
    }

    fn value(self) -> f64 {
        match self {
            GapThreshold::Relative(v) | GapThreshold::Absolute(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target number of exemplars.
    pub k: usize,
    /// The ball radius is `n / alpha`.
    pub alpha: f64,
    pub eta: f64,
    pub q: NormKind,
    pub delta: GapThreshold,
    /// Defaults to `10 k + 100` when unset.
    pub max_iter: Option<usize>,
    pub kernel: KernelSpec,
    pub centering: Centering,
    pub epsilon_row: f64,
}

impl SolverConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            alpha: 10.0,
            eta: 0.0,
            q: NormKind::Two,
            delta: GapThreshold::default(),
            max_iter: None,
            kernel: KernelSpec::Linear,
            centering: Centering::PerDatapoint,
            epsilon_row: DEFAULT_EPSILON_ROW,
        }
    }

    pub fn effective_max_iter(&self) -> usize {
        self.max_iter.unwrap_or(10 * self.k + 100)
    }

    pub fn beta(&self, n: usize) -> f64 {
        n as f64 / self.alpha
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.k > n {
            return Err(Error::KTooLarge { k: self.k, limit: n, what: "number of data points" });
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta must be >= 0, got {}", self.eta)));
        }
        let d = self.delta.value();
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta must be >= 0, got {d}")));
        }
        if self.effective_max_iter() == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.epsilon_row >= 0.0 && self.epsilon_row.is_finite()) {
            return Err(Error::InvalidConfig("epsilon_row must be >= 0".into()));
        }
        self.kernel.validate()
    }
}

/// A vertex of the group-lasso ball: the matrix `e_row values^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub row: usize,
    pub values: Vec<f64>,
}

impl Atom {
    pub fn to_row_sparse(&self) -> RowSparseMatrix {
        let mut m = RowSparseMatrix::with_epsilon(self.values.len(), 0.0);
        // dimensions agree by construction
        m.add_scaled_row(self.row, 1.0, &self.values).expect("atom row in range");
        m
    }
}

/// Numerator and denominator of the exact line-search ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    /// `tr(D^T (K - K X))`
    pub numerator: f64,
    /// `tr(D^T K D)`
    pub denominator: f64,
}

impl LineSearch {
    pub fn ratio(&self) -> f64 {
        self.numerator / self.denominator
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Step(f64),
    Stalled,
}

/// Builds the atom for one gradient row; `None` when the row is zero.
fn atom_from_row(row: usize, grad: &[f64], q: NormKind, beta: f64) -> Option<Atom> {
    if q.dual_norm(grad) == 0.0 {
        return None;
    }
    let n = grad.len();
    let values = match q {
        NormKind::One => {
            let mut best = 0;
            for (l, g) in grad.iter().enumerate() {
                if g.abs() > grad[best].abs() {
                    best = l;
                }
            }
            let mut v = vec![0.0; n];
            v[best] = -beta * grad[best].signum();
            v
        }
        NormKind::Two => {
            let norm = q.norm(grad);
            grad.iter().map(|g| -beta * g / norm).collect()
        }
        NormKind::Infinity => grad.iter().map(|&g| if g < 0.0 { beta } else { -beta }).collect(),
    };
    Some(Atom { row, values })
}

/// Linear minimization oracle over rows produced by `fill_row`.
///
/// Picks the row with the largest dual norm (lowest index on ties). Returns
/// `None` when every row is zero, i.e. the iterate is stationary.
fn lmo_with<F>(n: usize, q: NormKind, beta: f64, mut fill_row: F) -> Option<Atom>
where
    F: FnMut(usize, &mut [f64]),
{
    let mut buf = vec![0.0; n];
    let mut best = (0usize, 0.0f64);
    for i in 0..n {
        fill_row(i, &mut buf);
        let v = q.dual_norm(&buf);
        if v > best.1 {
            best = (i, v);
        }
    }
    if best.1 == 0.0 {
        return None;
    }
    fill_row(best.0, &mut buf);
    atom_from_row(best.0, &buf, q, beta)
}

/// Linear minimization oracle on a materialized `n x n` gradient.
pub fn lmo(grad: &DenseMatrix, q: NormKind, beta: f64) -> Option<Atom> {
    let n = grad.cols();
    lmo_with(grad.rows(), q, beta, |i, buf| {
        for (l, b) in buf.iter_mut().enumerate().take(n) {
            *b = grad.get(i, l);
        }
    })
}

/// `-<grad, S - X>` over the nonzero rows of `S` and `X`.
pub fn fw_gap(grad: &DenseMatrix, s: &RowSparseMatrix, x: &RowSparseMatrix) -> f64 {
    let inner = |m: &RowSparseMatrix| -> f64 {
        m.iter_rows()
            .map(|(i, r)| r.iter().enumerate().map(|(l, v)| v * grad.get(i, l)).sum::<f64>())
            .sum()
    };
    -(inner(s) - inner(x))
}

/// Number of rows of `x` with l2 norm above its eviction threshold.
pub fn count_exemplars(x: &RowSparseMatrix) -> usize {
    let eps = x.epsilon_row();
    x.row_indices().filter(|&i| x.row_norm(i) > eps).count()
}

/// Nonzero rows ordered by descending l2 norm (lowest index on ties), truncated to `k`.
pub fn pick_exemplars(x: &RowSparseMatrix, k: usize) -> Vec<usize> {
    let eps = x.epsilon_row();
    let mut rows: Vec<(usize, f64)> =
        x.row_indices().map(|i| (i, x.row_norm(i))).filter(|&(_, nrm)| nrm > eps).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    rows.truncate(k);
    rows.into_iter().map(|(i, _)| i).collect()
}

/// Iterate and running product `K X` for one solve over a borrowed Gram matrix.
#[derive(Debug, Clone)]
pub struct SolverState<'a> {
    gram: &'a DenseMatrix,
    /// `K X`, row-major so gradient rows are contiguous.
    kx: Vec<f64>,
    x: RowSparseMatrix,
    beta: f64,
    q: NormKind,
    trace_gram: f64,
    gram_scale: f64,
    t: usize,
    last_gamma: f64,
    last_atom_row: Option<usize>,
}

impl<'a> SolverState<'a> {
    pub fn new(gram: &'a DenseMatrix, beta: f64, q: NormKind, epsilon_row: f64) -> Result<Self> {
        let n = gram.rows();
        if gram.cols() != n {
            return Err(Error::DimensionMismatch { left: n, right: gram.cols() });
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta must be > 0, got {beta}")));
        }
        Ok(Self {
            gram,
            kx: vec![0.0; n * n],
            x: RowSparseMatrix::with_epsilon(n, epsilon_row),
            beta,
            q,
            trace_gram: gram.trace(),
            gram_scale: gram.frobenius_norm(),
            t: 0,
            last_gamma: 0.0,
            last_atom_row: None,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.gram.rows()
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn x(&self) -> &RowSparseMatrix {
        &self.x
    }

    pub fn last_gamma(&self) -> f64 {
        self.last_gamma
    }

    pub fn last_atom_row(&self) -> Option<usize> {
        self.last_atom_row
    }

    #[inline]
    fn kx_row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.kx[i * n..(i + 1) * n]
    }

    /// Dense copy of the running product `K X`.
    pub fn kx(&self) -> DenseMatrix {
        let n = self.n();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for (l, v) in self.kx_row(i).iter().enumerate() {
                out.set(i, l, *v);
            }
        }
        out
    }

    /// Row `i` of the gradient `2 (K X - K)`.
    pub fn gradient_row(&self, i: usize, out: &mut [f64]) {
        // K is symmetric, so its row i is the contiguous column i
        for ((o, kx), k) in out.iter_mut().zip(self.kx_row(i)).zip(self.gram.col(i)) {
            *o = 2.0 * (kx - k);
        }
    }

    pub fn gradient(&self) -> DenseMatrix {
        let n = self.n();
        let mut out = DenseMatrix::zeros(n, n);
        let mut buf = vec![0.0; n];
        for i in 0..n {
            self.gradient_row(i, &mut buf);
            for (l, v) in buf.iter().enumerate() {
                out.set(i, l, *v);
            }
        }
        out
    }

    /// `tr(X^T K X)` over the nonzero rows of `X`.
    fn xtkx(&self) -> f64 {
        self.x.iter_rows().map(|(i, r)| dot(r, self.kx_row(i))).sum()
    }

    /// `f(X) = tr(X^T K X) - 2 tr(K X) + tr(K)`.
    pub fn objective(&self) -> f64 {
        let n = self.n();
        let trace_kx: f64 = (0..n).map(|i| self.kx[i * n + i]).sum();
        self.xtkx() - 2.0 * trace_kx + self.trace_gram
    }

    pub fn lmo(&self) -> Option<Atom> {
        lmo_with(self.n(), self.q, self.beta, |i, buf| self.gradient_row(i, buf))
    }

    /// Frank-Wolfe gap `-<grad, S - X>` for the atom `S`.
    pub fn fw_gap(&self, atom: &Atom) -> f64 {
        let j = atom.row;
        let ks = self.gram.col(j);
        let s_term: f64 = atom
            .values
            .iter()
            .zip(self.kx_row(j))
            .zip(ks)
            .map(|((s, kx), k)| s * (kx - k))
            .sum();
        let x_term: f64 = self
            .x
            .iter_rows()
            .map(|(i, r)| {
                r.iter()
                    .zip(self.kx_row(i))
                    .zip(self.gram.col(i))
                    .map(|((x, kx), k)| x * (kx - k))
                    .sum::<f64>()
            })
            .sum();
        -2.0 * (s_term - x_term)
    }

    /// Line-search terms for `D = S - X`, evaluated over nonzero rows only.
    pub fn line_search(&self, atom: &Atom) -> LineSearch {
        let j = atom.row;
        let s = &atom.values;
        let s_k = dot(s, self.gram.col(j));
        let s_kx = dot(s, self.kx_row(j));
        let x_k: f64 = self.x.iter_rows().map(|(i, r)| dot(r, self.gram.col(i))).sum();
        let x_kx = self.xtkx();
        let s_norm_sq = dot(s, s);
        // tr(D^T (K - KX)) = tr(S^T K) - tr(S^T K X) - tr(X^T K) + tr(X^T K X)
        let numerator = s_k - s_kx - x_k + x_kx;
        // tr(D^T K D) = K_jj ||s||^2 - 2 tr(S^T K X) + tr(X^T K X)
        let denominator = self.gram.get(j, j) * s_norm_sq - 2.0 * s_kx + x_kx;
        LineSearch { numerator, denominator }
    }

    /// Exact line-search step clamped to `[0, 1]`.
    pub fn step_size(&self, atom: &Atom) -> Result<StepOutcome> {
        let ls = self.line_search(atom);
        if ls.denominator < -1e-9 * self.gram_scale {
            return Err(Error::NegativeCurvature {
                curvature: ls.denominator,
                scale: self.gram_scale,
                iteration: self.t,
            });
        }
        if ls.denominator <= 0.0 {
            return Ok(StepOutcome::Stalled);
        }
        let gamma = ls.ratio().clamp(0.0, 1.0);
        if gamma == 0.0 || !gamma.is_finite() {
            return Ok(StepOutcome::Stalled);
        }
        Ok(StepOutcome::Step(gamma))
    }

    /// `X <- (1 - gamma) X + gamma S`, then refreshes `K X`.
    pub fn apply_step(&mut self, atom: &Atom, gamma: f64) -> Result<()> {
        if atom.row >= self.n() || atom.values.len() != self.n() {
            return Err(Error::DimensionMismatch { left: atom.values.len(), right: self.n() });
        }
        self.x.scale(1.0 - gamma);
        self.x.add_scaled_row(atom.row, gamma, &atom.values)?;
        self.update_gradient(atom, gamma);
        self.t += 1;
        self.last_gamma = gamma;
        self.last_atom_row = Some(atom.row);
        #[cfg(debug_assertions)]
        self.debug_check_kx();
        Ok(())
    }

    /// `(K X) <- (1 - gamma) (K X) + gamma K_(j) s^T`.
    fn update_gradient(&mut self, atom: &Atom, gamma: f64) {
        let n = self.n();
        let keep = 1.0 - gamma;
        let kj = self.gram.col(atom.row);
        for (row, &k_ij) in self.kx.chunks_exact_mut(n).zip(kj) {
            let c = gamma * k_ij;
            for (v, s) in row.iter_mut().zip(&atom.values) {
                *v = keep * *v + c * s;
            }
        }
    }

    #[cfg(debug_assertions)]
    fn debug_check_kx(&self) {
        // dense check is O(n^3); only affordable for small problems
        if self.n() > 64 {
            return;
        }
        let dense = self.gram.matmul(&self.x.to_dense()).expect("square");
        let err = self.kx().relative_frobenius_error(&dense);
        let scale = dense.frobenius_norm();
        debug_assert!(
            scale < 1e-300 || err <= 1e-8,
            "incremental K X drifted: relative error {err:e}"
        );
    }

    pub fn count_exemplars(&self) -> usize {
        count_exemplars(&self.x)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    KReached,
    GapConverged,
    MaxIter,
    Stalled,
}

impl Status {
    /// Whether the run ended on one of its intended stopping conditions.
    pub fn is_success(self) -> bool {
        matches!(self, Status::KReached | Status::GapConverged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Selected columns of `A`, by descending row norm of the final iterate.
    pub exemplar_indices: Vec<usize>,
    /// Rows in first-activation order, including any that were later evicted.
    pub insertion_order: Vec<usize>,
    pub status: Status,
    pub iterations: usize,
    pub beta: f64,
    pub objective_trace: Vec<f64>,
    pub gap_trace: Vec<f64>,
    /// Total wall time including preprocessing and Gram construction.
    pub elapsed: Duration,
    /// Wall time of the iteration loop alone.
    pub iteration_elapsed: Duration,
}

/// Centers `a`, forms the Gram matrix and runs the solver.
pub fn solve(a: &DenseMatrix, cfg: &SolverConfig) -> Result<SelectionResult> {
    cfg.validate(a.cols())?;
    let start = Instant::now();
    let centered = center(a, cfg.centering);
    let gram = build_gram(&centered, cfg.kernel, cfg.eta)?;
    let mut result = solve_gram(&gram, cfg)?;
    result.elapsed = start.elapsed();
    Ok(result)
}

/// Runs the solver on a precomputed Gram matrix. `cfg.kernel`, `cfg.eta` and
/// `cfg.centering` are assumed to be already reflected in `gram`.
pub fn solve_gram(gram: &DenseMatrix, cfg: &SolverConfig) -> Result<SelectionResult> {
    let n = gram.rows();
    cfg.validate(n)?;
    let start = Instant::now();
    let beta = cfg.beta(n);
    let max_iter = cfg.effective_max_iter();
    let mut state = SolverState::new(gram, beta, cfg.q, cfg.epsilon_row)?;
    let mut objective_trace = vec![state.objective()];
    let mut gap_trace = Vec::new();
    let mut threshold: Option<f64> = None;

    let status = loop {
        if state.count_exemplars() >= cfg.k {
            break Status::KReached;
        }
        if state.iteration() >= max_iter {
            break Status::MaxIter;
        }
        let Some(atom) = state.lmo() else {
            gap_trace.push(0.0);
            break Status::GapConverged;
        };
        let gap = state.fw_gap(&atom);
        gap_trace.push(gap);
        let delta = *threshold.get_or_insert_with(|| cfg.delta.resolve(gap));
        if gap < delta {
            break Status::GapConverged;
        }
        match state.step_size(&atom)? {
            StepOutcome::Stalled => break Status::Stalled,
            StepOutcome::Step(gamma) => state.apply_step(&atom, gamma)?,
        }
        objective_trace.push(state.objective());
    };

    let elapsed = start.elapsed();
    Ok(SelectionResult {
        exemplar_indices: pick_exemplars(state.x(), cfg.k),
        insertion_order: state.x().insertion_order().to_vec(),
        status,
        iterations: state.iteration(),
        beta,
        objective_trace,
        gap_trace,
        elapsed,
        iteration_elapsed: elapsed,
    })
}

//! Per-iteration timing and greedy iteration counts.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiments::{gen_exp2, Exp2Config};
use crate::matrix::{build_gram, center, DenseMatrix};
use crate::solver::{SolverConfig, SolverState, StepOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTiming {
    /// Wall time of each completed iteration (oracle, gap, line search, update).
    pub per_iteration: Vec<Duration>,
    /// Iterations until the iterate first had `k` nonzero rows, if it did.
    pub k_dagger: Option<usize>,
}

impl IterationTiming {
    pub fn median(&self) -> Option<Duration> {
        median_duration(&self.per_iteration)
    }
}

pub fn median_duration(values: &[Duration]) -> Option<Duration> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort();
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2 })
}

/// Runs up to `iterations` solver steps on `gram` without the `k` stopping
/// rule, timing each one and noting when `cfg.k` rows first become nonzero.
/// Stops early on a stationary point or a stalled step.
pub fn time_iterations(gram: &DenseMatrix, cfg: &SolverConfig, iterations: usize) -> Result<IterationTiming> {
    let n = gram.rows();
    let mut state = SolverState::new(gram, cfg.beta(n), cfg.q, cfg.epsilon_row)?;
    let mut per_iteration = Vec::with_capacity(iterations);
    let mut k_dagger = None;
    for _ in 0..iterations {
        let start = Instant::now();
        let Some(atom) = state.lmo() else { break };
        let _gap = std::hint::black_box(state.fw_gap(&atom));
        let gamma = match state.step_size(&atom)? {
            StepOutcome::Stalled => break,
            StepOutcome::Step(g) => g,
        };
        state.apply_step(&atom, gamma)?;
        per_iteration.push(start.elapsed());
        if k_dagger.is_none() && state.count_exemplars() >= cfg.k {
            k_dagger = Some(state.iteration());
        }
    }
    Ok(IterationTiming { per_iteration, k_dagger })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub d: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    /// Iterations timed per trial; at least `2 k` so `k_dagger` is observable.
    pub iterations: usize,
    pub alpha: f64,
    pub cluster_sigma: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_list: vec![500, 1000],
            d: 50,
            k: 10,
            trials: 3,
            seed: 0,
            iterations: 40,
            alpha: 10.0,
            cluster_sigma: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub median_iter_ms: f64,
    /// Median over trials; `None` when no trial reached `k` rows.
    pub median_k_dagger: Option<f64>,
    /// `median_iter_ms` divided by the first row's value.
    pub time_ratio: f64,
    pub gram_ms: f64,
}

/// Times the solver on Gaussian-cluster data for each `n` in `cfg.n_list`.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows: Vec<BenchRow> = Vec::new();
    for &n in &cfg.n_list {
        let mut times = Vec::new();
        let mut daggers = Vec::new();
        let mut gram_ms = 0.0;
        for t in 0..cfg.trials.max(1) {
            let data = gen_exp2(
                &Exp2Config {
                    n_points: n,
                    ambient_dim: cfg.d,
                    n_clusters: cfg.k.min(n),
                    cluster_sigma: cfg.cluster_sigma,
                    ..Exp2Config::default()
                },
                cfg.seed.wrapping_add(t as u64),
            )?;
            let mut scfg = SolverConfig::new(cfg.k.min(n));
            scfg.alpha = cfg.alpha;
            let start = Instant::now();
            let gram = build_gram(&center(&data.a, scfg.centering), scfg.kernel, scfg.eta)?;
            gram_ms += start.elapsed().as_secs_f64() * 1e3;
            let timing = time_iterations(&gram, &scfg, cfg.iterations.max(2 * cfg.k))?;
            times.extend(timing.per_iteration);
            if let Some(kd) = timing.k_dagger {
                daggers.push(kd as f64);
            }
        }
        let median_iter_ms = median_duration(&times).map_or(f64::NAN, |d| d.as_secs_f64() * 1e3);
        daggers.sort_by(f64::total_cmp);
        let median_k_dagger = match daggers.len() {
            0 => None,
            l if l % 2 == 1 => Some(daggers[l / 2]),
            l => Some(0.5 * (daggers[l / 2 - 1] + daggers[l / 2])),
        };
        let base = rows.first().map_or(median_iter_ms, |r| r.median_iter_ms);
        rows.push(BenchRow {
            n,
            d: cfg.d,
            k: cfg.k,
            median_iter_ms,
            median_k_dagger,
            time_ratio: median_iter_ms / base,
            gram_ms: gram_ms / cfg.trials.max(1) as f64,
        });
    }
    Ok(rows)
}

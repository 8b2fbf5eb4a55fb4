//! Reference exemplar selectors: uniform random subsets, k-medoids and
//! column-pivoted QR.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{pairwise_sq_distances, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Random,
    Kmedoids,
    Rrqr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub k: usize,
    pub seed: u64,
    pub kmedoids_max_sweeps: usize,
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod, k: usize, seed: u64) -> Self {
        Self { method, k, seed, kmedoids_max_sweeps: 100 }
    }

    /// Runs the configured selector on the columns of `a`.
    pub fn select(&self, a: &DenseMatrix) -> Result<Vec<usize>> {
        match self.method {
            BaselineMethod::Random => random_select(a.cols(), self.k, self.seed),
            BaselineMethod::Kmedoids => {
                Ok(k_medoids(a, self.k, self.seed, self.kmedoids_max_sweeps)?.medoids)
            }
            BaselineMethod::Rrqr => rrqr_select(a, self.k),
        }
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k > n {
        return Err(Error::KTooLarge { k, limit: n, what: "number of data points" });
    }
    Ok(())
}

/// `k` distinct indices from `0..n`, uniformly without replacement.
pub fn random_select(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_k(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, n, k).into_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMedoids {
    pub medoids: Vec<usize>,
    /// Cluster position (into `medoids`) of every point.
    pub assignment: Vec<usize>,
    /// Total within-cluster squared distance after each assignment step.
    pub cost_trace: Vec<f64>,
    pub sweeps: usize,
}

/// Voronoi-iteration k-medoids under squared Euclidean distance.
///
/// Each sweep assigns every point to its nearest medoid (a medoid always
/// belongs to its own cluster; other ties go to the lowest cluster position)
/// and then moves each medoid to the member minimizing the summed distance to
/// the rest of its cluster. Stops when no medoid moves or after `max_sweeps`.
pub fn k_medoids(a: &DenseMatrix, k: usize, seed: u64, max_sweeps: usize) -> Result<KMedoids> {
    let n = a.cols();
    check_k(k, n)?;
    let mut medoids = random_select(n, k, seed)?;
    if k == 0 {
        return Ok(KMedoids { medoids, assignment: vec![], cost_trace: vec![], sweeps: 0 });
    }
    let dist = pairwise_sq_distances(a);
    let mut assignment = vec![0usize; n];
    let mut cost_trace = Vec::new();
    let mut sweeps = 0;

    loop {
        let mut cost = 0.0;
        for (p, slot) in assignment.iter_mut().enumerate() {
            let mut best = (0usize, f64::INFINITY);
            for (c, &m) in medoids.iter().enumerate() {
                let d = dist.get(p, m);
                if d < best.1 {
                    best = (c, d);
                }
            }
            *slot = best.0;
            cost += best.1;
        }
        for (c, &m) in medoids.iter().enumerate() {
            cost -= dist.get(m, medoids[assignment[m]]);
            assignment[m] = c;
        }
        cost_trace.push(cost);

        if sweeps >= max_sweeps {
            break;
        }
        sweeps += 1;

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (p, &c) in assignment.iter().enumerate() {
            members[c].push(p);
        }
        let mut changed = false;
        for (c, cluster) in members.iter().enumerate() {
            let within = |i: usize| cluster.iter().map(|&j| dist.get(i, j)).sum::<f64>();
            let current = medoids[c];
            let mut best = (current, within(current));
            for &i in cluster {
                let s = within(i);
                if s < best.1 || (s == best.1 && i < best.0 && best.0 != current) {
                    best = (i, s);
                }
            }
            if best.0 != current {
                medoids[c] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(KMedoids { medoids, assignment, cost_trace, sweeps })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotedQr {
    /// Original column indices in pivot order.
    pub pivots: Vec<usize>,
    /// Residual norm of each pivot column when it was chosen (`|R_ii|`).
    pub residual_norms: Vec<f64>,
}

/// Column-pivoted Householder QR (Businger-Golub) stopped after `k` pivots.
///
/// Partial column norms are downdated after each reflection and recomputed
/// from the trailing block when cancellation makes the downdate unreliable.
/// Ties in the pivot choice go to the lowest original column index.
pub fn pivoted_qr(a: &DenseMatrix, k: usize) -> Result<PivotedQr> {
    let (m, n) = (a.rows(), a.cols());
    let limit = m.min(n);
    if k > limit {
        return Err(Error::KTooLarge { k, limit, what: "min(rows, columns) for pivoted QR" });
    }
    let mut work: Vec<Vec<f64>> = (0..n).map(|j| a.col(j).to_vec()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut vn1: Vec<f64> = work.iter().map(|c| norm(c)).collect();
    let mut vn2 = vn1.clone();
    let tol3z = f64::EPSILON.sqrt();
    let mut residual_norms = Vec::with_capacity(k);

    for i in 0..k {
        let mut p = i;
        for j in i + 1..n {
            if vn1[j] > vn1[p] || (vn1[j] == vn1[p] && perm[j] < perm[p]) {
                p = j;
            }
        }
        if p != i {
            work.swap(i, p);
            perm.swap(i, p);
            vn1.swap(i, p);
            vn2.swap(i, p);
        }

        // Householder reflector zeroing work[i][i+1..]
        let alpha = norm(&work[i][i..]);
        residual_norms.push(alpha);
        if alpha == 0.0 {
            continue;
        }
        let x0 = work[i][i];
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = work[i][i..].to_vec();
        v[0] -= beta;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        work[i][i] = beta;
        work[i][i + 1..].iter_mut().for_each(|x| *x = 0.0);
        if vnorm_sq == 0.0 {
            continue;
        }
        for j in i + 1..n {
            let col = &mut work[j][i..];
            let s: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * s / vnorm_sq;
            col.iter_mut().zip(&v).for_each(|(c, vv)| *c -= f * vv);

            if vn1[j] != 0.0 {
                let ratio = work[j][i].abs() / vn1[j];
                let temp = (1.0 - ratio * ratio).max(0.0);
                let temp2 = temp * (vn1[j] / vn2[j]).powi(2);
                if temp2 <= tol3z {
                    vn1[j] = norm(&work[j][i + 1..]);
                    vn2[j] = vn1[j];
                } else {
                    vn1[j] *= temp.sqrt();
                }
            }
        }
    }
    perm.truncate(k);
    Ok(PivotedQr { pivots: perm, residual_norms })
}

/// First `k` pivot columns of a column-pivoted QR of `a`.
pub fn rrqr_select(a: &DenseMatrix, k: usize) -> Result<Vec<usize>> {
    Ok(pivoted_qr(a, k)?.pivots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::collections::BTreeSet;

    fn distinct_in_range(idx: &[usize], n: usize) -> bool {
        idx.iter().collect::<BTreeSet<_>>().len() == idx.len() && idx.iter().all(|&i| i < n)
    }

    #[test]
    fn random_exhaustion_and_empty() {
        let mut p = random_select(5, 5, 9).unwrap();
        p.sort();
        assert_eq!(p, vec![0, 1, 2, 3, 4]);
        assert!(random_select(5, 0, 1).unwrap().is_empty());
        assert!(random_select(5, 6, 1).is_err());
        assert_eq!(random_select(100, 7, 3).unwrap(), random_select(100, 7, 3).unwrap());
    }

    #[test]
    fn random_is_uniform() {
        let (n, k, seeds) = (1000usize, 10usize, 10_000u64);
        let mut counts = vec![0usize; n];
        for seed in 0..seeds {
            let s = random_select(n, k, seed).unwrap();
            assert!(distinct_in_range(&s, n));
            for i in s {
                counts[i] += 1;
            }
        }
        let expected = (seeds as usize * k) as f64 / n as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 999 degrees of freedom: mean 999, sd ~44.7; 5 sd bound
        assert!(chi2 < 999.0 + 5.0 * 44.7, "chi2 = {chi2}");
        // the +-0.003 band is ~3 sd per index, so a few of 1000 indices fall outside by chance
        let inside = counts.iter().filter(|&&c| (c as f64 / seeds as f64 - 0.01).abs() <= 0.003).count();
        assert!(inside as f64 >= 0.99 * n as f64, "only {inside} indices within band");
    }

    fn two_pairs() -> DenseMatrix {
        DenseMatrix::from_columns(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![10.0, 10.0],
            vec![10.0, 10.2],
        ])
        .unwrap()
    }

    #[test]
    fn kmedoids_separated_pairs() {
        let a = two_pairs();
        let dist = pairwise_sq_distances(&a);
        let cost = |set: &[usize]| -> f64 {
            (0..4).map(|p| set.iter().map(|&m| dist.get(p, m)).fold(f64::INFINITY, f64::min)).sum()
        };
        let mut best = (vec![], f64::INFINITY);
        for i in 0..4 {
            for j in i + 1..4 {
                let c = cost(&[i, j]);
                if c < best.1 {
                    best = (vec![i, j], c);
                }
            }
        }
        for seed in 0..20 {
            let res = k_medoids(&a, 2, seed, 50).unwrap();
            let mut m = res.medoids.clone();
            m.sort();
            assert!(m[0] < 2 && m[1] >= 2, "seed {seed}: {m:?}");
            assert!((cost(&m) - best.1).abs() < 1e-12);
        }
    }

    #[test]
    fn kmedoids_k_equals_n() {
        let a = two_pairs();
        let mut m = k_medoids(&a, 4, 3, 10).unwrap().medoids;
        m.sort();
        assert_eq!(m, vec![0, 1, 2, 3]);
    }

    #[test]
    fn kmedoids_cost_non_increasing_and_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cols: Vec<Vec<f64>> =
            (0..120).map(|_| (0..4).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let a = DenseMatrix::from_columns(&cols).unwrap();
        for seed in 0..10 {
            let res = k_medoids(&a, 8, seed, 100).unwrap();
            assert!(distinct_in_range(&res.medoids, 120));
            for w in res.cost_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * w[0].abs());
            }
        }
    }

    #[test]
    fn kmedoids_with_duplicate_points() {
        let a = DenseMatrix::from_columns(&[vec![1.0], vec![1.0], vec![1.0], vec![5.0]]).unwrap();
        for seed in 0..10 {
            let res = k_medoids(&a, 3, seed, 20).unwrap();
            assert!(distinct_in_range(&res.medoids, 4));
        }
    }

    #[test]
    fn rrqr_largest_column_first() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(rrqr_select(&a, 1).unwrap(), vec![0]);
        assert!(matches!(rrqr_select(&a, 3), Err(Error::KTooLarge { limit: 2, .. })));
    }

    #[test]
    fn rrqr_skips_duplicates() {
        let a = DenseMatrix::from_columns(&[
            vec![3.0, 0.0, 0.0],
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.5],
            vec![3.0, 0.0, 0.0],
        ])
        .unwrap();
        let p = rrqr_select(&a, 2).unwrap();
        assert_eq!(p, vec![0, 2]);
    }

    // Pivoting by residual norms recomputed from scratch with Gram-Schmidt.
    fn textbook_pivots(a: &DenseMatrix, k: usize) -> Vec<usize> {
        let n = a.cols();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut chosen = Vec::new();
        for _ in 0..k {
            let mut best = (usize::MAX, -1.0);
            for j in 0..n {
                if chosen.contains(&j) {
                    continue;
                }
                let mut r = a.col(j).to_vec();
                for _ in 0..2 {
                    for q in &basis {
                        let c: f64 = q.iter().zip(&r).map(|(x, y)| x * y).sum();
                        r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                    }
                }
                let nrm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm > best.1 {
                    best = (j, nrm);
                }
            }
            let mut r = a.col(best.0).to_vec();
            for _ in 0..2 {
                for q in &basis {
                    let c: f64 = q.iter().zip(&r).map(|(x, y)| x * y).sum();
                    r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let nrm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            basis.push(r.iter().map(|x| x / nrm).collect());
            chosen.push(best.0);
        }
        chosen
    }

    #[test]
    fn rrqr_matches_textbook_pivoting() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..3 {
            let data: Vec<f64> = (0..50 * 80).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = DenseMatrix::from_col_major(50, 80, data).unwrap();
            let qr = pivoted_qr(&a, 20).unwrap();
            assert_eq!(qr.pivots, textbook_pivots(&a, 20));
            for w in qr.residual_norms.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9));
            }
        }
    }
}

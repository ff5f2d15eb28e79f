use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ClusteringError;
use crate::rng::stream_rng;
use crate::vectors::{sq_dist, Vectors};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KMeansParams {
    pub k: usize,
    /// Batches at least as large as the data run full-batch Lloyd updates.
    pub batch_size: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Relative inertia change regarded as stalled.
    pub tol: f64,
    /// Consecutive stalled iterations before stopping.
    pub patience: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            k: 8,
            batch_size: 131_072,
            max_iter: 300,
            seed: 0,
            tol: 1e-4,
            patience: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub centers: Vectors,
    pub assignments: Vec<usize>,
    /// Inertia per iteration: over all samples in full-batch mode, over a
    /// fixed evaluation subsample otherwise.
    pub inertia_trace: Vec<f64>,
    pub converged: bool,
}

/// Index of the closest center (lowest index on ties) and its squared
/// distance.
pub fn nearest_center(x: &[f64], centers: &Vectors) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.rows().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign_all(v: &Vectors, centers: &Vectors) -> Vec<(usize, f64)> {
    (0..v.len())
        .into_par_iter()
        .map(|i| nearest_center(v.row(i), centers))
        .collect()
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance to the nearest chosen center. Exhausted distance mass falls
/// back to the lowest-index unchosen sample.
fn kmeans_pp(v: &Vectors, k: usize, seed: u64) -> Vectors {
    let mut rng = stream_rng(seed, 0);
    let n = v.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(v.row(i), v.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&d| d > 0.0).unwrap();
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(v.row(i), v.row(next)));
        }
    }
    v.select(&chosen)
}

/// Mini-batch k-means (Sculley's per-center learning rate) with k-means++
/// seeding. Stops after `patience` consecutive iterations whose relative
/// inertia change is below `tol`, or at `max_iter`. Deterministic per seed.
pub fn minibatch_kmeans(v: &Vectors, params: &KMeansParams) -> Result<KMeansResult, ClusteringError> {
    let n = v.len();
    let k = params.k;
    if n == 0 {
        return Err(ClusteringError::EmptyInput);
    }
    if k == 0 {
        return Err(ClusteringError::InvalidParam("k must be positive".into()));
    }
    if k > n {
        return Err(ClusteringError::KTooLarge { k, n });
    }
    let mut centers = kmeans_pp(v, k, params.seed);
    let full = params.batch_size >= n;
    let mut trace = Vec::new();
    let mut stalled = 0;
    let mut converged = false;

    if full {
        for _ in 0..params.max_iter {
            let assign = assign_all(v, &centers);
            let inertia: f64 = assign.iter().map(|a| a.1).sum();
            let mut sums = Vectors::zeros(k, v.dim());
            let mut counts = vec![0usize; k];
            for (i, &(c, _)) in assign.iter().enumerate() {
                counts[c] += 1;
                for (s, x) in sums.row_mut(c).iter_mut().zip(v.row(i)) {
                    *s += x;
                }
            }
            for c in 0..k {
                if counts[c] > 0 {
                    let m = counts[c] as f64;
                    for (dst, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                        *dst = s / m;
                    }
                }
            }
            let stop = record(&mut trace, inertia, params, &mut stalled);
            if stop {
                converged = true;
                break;
            }
        }
    } else {
        let mut rng = stream_rng(params.seed, 1);
        let eval: Vec<usize> = {
            let m = (4 * params.batch_size).min(n);
            let mut idx = sample(&mut rng, n, m).into_vec();
            idx.sort_unstable();
            idx
        };
        let eval_v = v.select(&eval);
        let mut seen = vec![0u64; k];
        for _ in 0..params.max_iter {
            let batch = sample(&mut rng, n, params.batch_size).into_vec();
            let bv = v.select(&batch);
            let assign = assign_all(&bv, &centers);
            for (b, &(c, _)) in assign.iter().enumerate() {
                seen[c] += 1;
                let eta = 1.0 / seen[c] as f64;
                for (dst, x) in centers.row_mut(c).iter_mut().zip(bv.row(b)) {
                    *dst += eta * (x - *dst);
                }
            }
            let inertia: f64 = assign_all(&eval_v, &centers).iter().map(|a| a.1).sum();
            if record(&mut trace, inertia, params, &mut stalled) {
                converged = true;
                break;
            }
        }
    }
    let assignments = assign_all(v, &centers).into_iter().map(|a| a.0).collect();
    Ok(KMeansResult {
        centers,
        assignments,
        inertia_trace: trace,
        converged,
    })
}

fn record(trace: &mut Vec<f64>, inertia: f64, p: &KMeansParams, stalled: &mut usize) -> bool {
    if let Some(&prev) = trace.last() {
        let rel = if prev > 0.0 { (prev - inertia).abs() / prev } else { 0.0 };
        if rel < p.tol {
            *stalled += 1;
        } else {
            *stalled = 0;
        }
    }
    trace.push(inertia);
    inertia == 0.0 || *stalled >= p.patience
}

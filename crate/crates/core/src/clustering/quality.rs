use std::collections::BTreeMap;

use rand::seq::index::sample;
use rayon::prelude::*;

use super::ClusteringError;
use crate::rng::stream_rng;
use crate::vectors::{sq_dist, Vectors};

/// Mean silhouette `(b − a) / max(a, b)` with Euclidean distances. Above
/// `sample_cap` samples a seeded subsample is scored on its own.
/// Members of singleton clusters score 0.
pub fn silhouette(v: &Vectors, labels: &[u32], sample_cap: usize, seed: u64) -> Result<f64, ClusteringError> {
    if v.len() != labels.len() {
        return Err(ClusteringError::DimMismatch {
            expected: v.len(),
            got: labels.len(),
        });
    }
    let idx: Vec<usize> = if v.len() > sample_cap && sample_cap > 0 {
        let mut s = sample(&mut stream_rng(seed, 0), v.len(), sample_cap).into_vec();
        s.sort_unstable();
        s
    } else {
        (0..v.len()).collect()
    };
    let lab: Vec<u32> = idx.iter().map(|&i| labels[i]).collect();
    let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in &lab {
        *sizes.entry(l).or_default() += 1;
    }
    if sizes.len() < 2 {
        return Err(ClusteringError::SingleCluster);
    }
    let clusters: Vec<u32> = sizes.keys().copied().collect();
    let scores: Vec<f64> = idx
        .par_iter()
        .enumerate()
        .map(|(p, &i)| {
            let mut sums: BTreeMap<u32, f64> = clusters.iter().map(|&c| (c, 0.0)).collect();
            for (q, &j) in idx.iter().enumerate() {
                if p != q {
                    *sums.get_mut(&lab[q]).unwrap() += sq_dist(v.row(i), v.row(j)).sqrt();
                }
            }
            let own = lab[p];
            if sizes[&own] == 1 {
                return 0.0;
            }
            let a = sums[&own] / (sizes[&own] - 1) as f64;
            let b = clusters
                .iter()
                .filter(|&&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// k-nearest-neighbour majority vote (neighbours ordered by distance, then
/// index). Vote ties go to the smallest summed distance, then the lowest
/// label.
pub fn knn_classify(
    train: &Vectors,
    train_labels: &[u32],
    queries: &Vectors,
    k: usize,
) -> Result<Vec<u32>, ClusteringError> {
    if k == 0 || k > train.len() {
        return Err(ClusteringError::KTooLarge { k, n: train.len() });
    }
    if train.dim() != queries.dim() {
        return Err(ClusteringError::DimMismatch {
            expected: train.dim(),
            got: queries.dim(),
        });
    }
    Ok((0..queries.len())
        .into_par_iter()
        .map(|q| {
            let x = queries.row(q);
            let mut d: Vec<(f64, usize)> = train.rows().map(|t| sq_dist(x, t).sqrt()).zip(0..).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
            for &(dist, i) in &d[..k] {
                let e = votes.entry(train_labels[i]).or_default();
                e.0 += 1;
                e.1 += dist;
            }
            // BTreeMap iterates labels ascending, so strict comparisons keep
            // the lowest label on full ties
            let mut best: Option<(u32, usize, f64)> = None;
            for (&l, &(c, s)) in &votes {
                best = match best {
                    Some((_, bc, bs)) if c < bc || (c == bc && s >= bs) => best,
                    _ => Some((l, c, s)),
                };
            }
            best.unwrap().0
        })
        .collect())
}

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::quadrants::QuadrantProfile;
use super::{CompositionError, Result};
use crate::clustering::{knn_classify, silhouette, ClusteringError};
use crate::model::N_CLASSES;
use crate::registry::Partitioner;
use crate::rng::stream_rng;
use crate::Vectors;

/// Four components per semantic class.
pub const PHI_LEN: usize = 4 * N_CLASSES;

const LEFT: [usize; 3] = [0, 3, 6];
const MIDDLE: [usize; 3] = [1, 4, 7];
const RIGHT: [usize; 3] = [2, 5, 8];
const TOP: [usize; 3] = [0, 1, 2];
const BOTTOM: [usize; 3] = [6, 7, 8];

/// Composition features Φ, laid out component-major:
/// `[ratios; center; vertical; horizontal]`, each with one entry per class.
///
/// * ratios: `log10(overall share)`
/// * center: `log10(3·middle column / all columns)`
/// * vertical: `log10(top row / bottom row)`
/// * horizontal: `log10(left column / right column)`
///
/// `eps` is added to every sum of quadrant shares before the logs.
pub fn composition_features(profile: &QuadrantProfile, eps: f64) -> Vec<f64> {
    let total: u64 = profile.counts.iter().flatten().sum();
    let sum = |qs: &[usize], c: usize| qs.iter().map(|&q| profile.ratios[q][c]).sum::<f64>() + eps;
    let mut phi = vec![0.0; PHI_LEN];
    for c in 0..N_CLASSES {
        let share = if total > 0 {
            profile.counts.iter().map(|q| q[c]).sum::<u64>() as f64 / total as f64
        } else {
            profile.ratios.iter().map(|q| q[c]).sum::<f64>() / 9.0
        };
        let all: f64 = profile.ratios.iter().map(|q| q[c]).sum::<f64>() + eps;
        phi[c] = (share + eps).log10();
        phi[N_CLASSES + c] = (3.0 * sum(&MIDDLE, c) / all).log10();
        phi[2 * N_CLASSES + c] = (sum(&TOP, c) / sum(&BOTTOM, c)).log10();
        phi[3 * N_CLASSES + c] = (sum(&LEFT, c) / sum(&RIGHT, c)).log10();
    }
    phi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TypeParams {
    pub k: usize,
    /// Samples clustered directly; the rest are labelled by kNN.
    pub train_size: usize,
    pub knn: usize,
    /// Cap on silhouette samples.
    pub silhouette_cap: usize,
    pub seed: u64,
}

impl Default for TypeParams {
    fn default() -> Self {
        Self {
            k: 8,
            train_size: 4000,
            knn: 7,
            silhouette_cap: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticTypes {
    pub labels: Vec<usize>,
    pub train: Vec<usize>,
    /// Silhouette on the held-out samples (on the training set when
    /// nothing is held out).
    pub silhouette: f64,
}

/// Semantic types of standardized feature vectors: a seeded training subset
/// is partitioned by `partitioner`, the remaining samples take the
/// majority label of their `knn` nearest training samples.
pub fn semantic_types(features: &Vectors, partitioner: &dyn Partitioner, params: &TypeParams) -> Result<SemanticTypes> {
    let n = features.len();
    if params.k >= n {
        return Err(ClusteringError::KTooLarge { k: params.k, n }.into());
    }
    if params.k < 2 {
        return Err(CompositionError::InvalidParam("k must be at least 2".into()));
    }
    let m = params.train_size.clamp(params.k + 1, n);
    let mut train: Vec<usize> = sample(&mut stream_rng(params.seed, 0), n, m).into_vec();
    train.sort_unstable();
    let tv = features.select(&train);
    let part = partitioner.partition(&tv, params.k, params.seed)?;
    let mut labels = vec![usize::MAX; n];
    for (&i, &l) in train.iter().zip(&part.labels) {
        labels[i] = l;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| labels[i] == usize::MAX).collect();
    let train_labels: Vec<u32> = part.labels.iter().map(|&l| l as u32).collect();
    if !rest.is_empty() {
        let k = params.knn.min(train.len());
        let pred = knn_classify(&tv, &train_labels, &features.select(&rest), k)?;
        for (&i, l) in rest.iter().zip(pred) {
            labels[i] = l as usize;
        }
    }
    let (eval, eval_labels): (Vectors, Vec<u32>) = if rest.len() >= 2 {
        (features.select(&rest), rest.iter().map(|&i| labels[i] as u32).collect())
    } else {
        (tv, train_labels)
    };
    let s = silhouette(&eval, &eval_labels, params.silhouette_cap, params.seed).unwrap_or(f64::NAN);
    Ok(SemanticTypes {
        labels,
        train,
        silhouette: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::quadrants::ContentBox;
    use crate::registry::partitioners;
    use crate::rng::rng_from;
    use rand::Rng;

    fn profile(counts: [[u64; N_CLASSES]; 9]) -> QuadrantProfile {
        QuadrantProfile::from_counts(ContentBox { x0: 0, y0: 0, x1: 9, y1: 9 }, counts)
    }

    #[test]
    fn symmetric_profile() {
        let mut c = [[0u64; N_CLASSES]; 9];
        for (q, row) in c.iter_mut().enumerate() {
            let ring = if q == 4 { 0 } else { 1 + (q % 2) };
            row[2] = 10 + 5 * ring as u64;
            row[3] = 20;
        }
        let phi = composition_features(&profile(c), 1e-6);
        for cl in 0..N_CLASSES {
            assert!(phi[2 * N_CLASSES + cl].abs() < 1e-12);
            assert!(phi[3 * N_CLASSES + cl].abs() < 1e-12);
        }
        assert!(phi.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn top_row_content() {
        let mut c = [[0u64; N_CLASSES]; 9];
        for (q, row) in c.iter_mut().enumerate() {
            if q < 3 {
                row[4] = 50;
            } else {
                row[0] = 50;
            }
        }
        let eps = 1e-6;
        let phi = composition_features(&profile(c), eps);
        let expected = ((3.0 + eps) / eps).log10();
        assert!((phi[2 * N_CLASSES + 4] - expected).abs() < 1e-9);
    }

    #[test]
    fn scale_invariant() {
        let mut rng = rng_from(4);
        let mut c = [[0u64; N_CLASSES]; 9];
        c.iter_mut().flatten().for_each(|v| *v = rng.random_range(0..100));
        let mut d = c;
        d.iter_mut().flatten().for_each(|v| *v *= 2);
        assert_eq!(composition_features(&profile(c), 1e-6), composition_features(&profile(d), 1e-6));
    }

    #[test]
    fn two_blobs_two_types() {
        let mut rng = rng_from(5);
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|i| {
                let c = if i % 2 == 0 { -3.0 } else { 3.0 };
                (0..4).map(|_| c + rng.random_range(-0.5..0.5)).collect()
            })
            .collect();
        let v = Vectors::from_rows(&rows);
        let reg = partitioners();
        for name in ["kmeans", "spectral"] {
            let t = semantic_types(
                &v,
                reg.get(name).unwrap(),
                &TypeParams {
                    k: 2,
                    train_size: 40,
                    ..Default::default()
                },
            )
            .unwrap();
            for i in 0..120 {
                assert_eq!(t.labels[i] == t.labels[0], i % 2 == 0, "{name} sample {i}");
            }
            assert!(t.silhouette > 0.8);
        }
        let err = semantic_types(&v, reg.get("kmeans").unwrap(), &TypeParams { k: 120, ..Default::default() });
        assert_eq!(err.unwrap_err(), CompositionError::Clustering(ClusteringError::KTooLarge { k: 120, n: 120 }));
    }
}

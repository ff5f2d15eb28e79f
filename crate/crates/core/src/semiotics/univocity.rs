use std::collections::BTreeMap;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{mode_slot, Result, SemioticsError, SignCorpus, N_MODES};
use crate::rng::stream_rng;
use crate::stats::percentile;

/// Sparse maps × clusters × modes occurrence counts (modes 1–7).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SemanticSymbolicCounts {
    pub per_map: Vec<BTreeMap<usize, [u32; N_MODES]>>,
}

impl SemanticSymbolicCounts {
    pub fn from_corpus(corpus: &SignCorpus) -> Self {
        let mut per_map = vec![BTreeMap::new(); corpus.n_maps()];
        for s in &corpus.signs {
            if let Some(k) = s.mode.and_then(mode_slot) {
                per_map[s.map].entry(s.cluster).or_insert([0; N_MODES])[k] += 1;
            }
        }
        Self { per_map }
    }

    pub fn n_maps(&self) -> usize {
        self.per_map.len()
    }
}

fn mean_share<'a>(clusters: impl Iterator<Item = &'a [u32; N_MODES]>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for c in clusters {
        let total: u32 = c.iter().sum();
        if total > 0 {
            sum += *c.iter().max().unwrap() as f64 / total as f64;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Univocity of a set of maps: counts are pooled over the set, then each
/// cluster with at least one occurrence contributes its most common mode
/// share.
pub fn univocity(x: &SemanticSymbolicCounts, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(SemioticsError::EmptySubset);
    }
    let mut pooled: BTreeMap<usize, [u32; N_MODES]> = BTreeMap::new();
    for &m in subset {
        for (&c, counts) in &x.per_map[m] {
            let e = pooled.entry(c).or_insert([0; N_MODES]);
            e.iter_mut().zip(counts).for_each(|(a, b)| *a += b);
        }
    }
    mean_share(pooled.values()).ok_or(SemioticsError::EmptySubset)
}

/// Mean over maps of the single-map univocity; maps without occurrences
/// are skipped.
pub fn univocity_per_map(x: &SemanticSymbolicCounts, subset: &[usize]) -> Result<f64> {
    let vals: Vec<f64> = subset.iter().filter_map(|&m| mean_share(x.per_map[m].values())).collect();
    if vals.is_empty() {
        return Err(SemioticsError::EmptySubset);
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivocityEstimate {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub reps: usize,
    pub sample_size: usize,
}

/// Set-size–controlled univocity: mean and 5/95 percentiles over `reps`
/// random samples of `sample_size` maps drawn without replacement. Samples
/// with no occurrence are not counted.
pub fn univocity_bootstrap(
    x: &SemanticSymbolicCounts,
    subset: &[usize],
    reps: usize,
    sample_size: usize,
    seed: u64,
) -> Result<UnivocityEstimate> {
    if subset.is_empty() {
        return Err(SemioticsError::EmptySubset);
    }
    if reps == 0 || sample_size == 0 {
        return Err(SemioticsError::InvalidParam("reps and sample_size must be positive".into()));
    }
    let size = sample_size.min(subset.len());
    let vals: Vec<f64> = (0..reps)
        .filter_map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let mut pick: Vec<usize> = sample(&mut rng, subset.len(), size).into_iter().map(|i| subset[i]).collect();
            pick.sort_unstable();
            univocity(x, &pick).ok()
        })
        .collect();
    if vals.is_empty() {
        return Err(SemioticsError::EmptySubset);
    }
    Ok(UnivocityEstimate {
        mean: vals.iter().sum::<f64>() / vals.len() as f64,
        ci_lo: percentile(&vals, 5.0),
        ci_hi: percentile(&vals, 95.0),
        reps: vals.len(),
        sample_size: size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(maps: Vec<Vec<(usize, [u32; N_MODES])>>) -> SemanticSymbolicCounts {
        SemanticSymbolicCounts {
            per_map: maps.into_iter().map(|m| m.into_iter().collect()).collect(),
        }
    }

    #[test]
    fn split_cluster() {
        let x = counts(vec![vec![(0, [3, 1, 0, 0, 0, 0, 0])]]);
        assert_eq!(univocity(&x, &[0]).unwrap(), 0.75);
    }

    #[test]
    fn opposite_usage_gap() {
        let x = counts(vec![
            vec![(0, [5, 0, 0, 0, 0, 0, 0])],
            vec![(0, [0, 5, 0, 0, 0, 0, 0])],
        ]);
        assert_eq!(univocity(&x, &[0, 1]).unwrap(), 0.5);
        assert_eq!(univocity_per_map(&x, &[0, 1]).unwrap(), 1.0);
    }

    #[test]
    fn empty_subset() {
        let x = counts(vec![vec![]]);
        assert_eq!(univocity(&x, &[]), Err(SemioticsError::EmptySubset));
        assert_eq!(univocity(&x, &[0]), Err(SemioticsError::EmptySubset));
    }

    #[test]
    fn bootstrap_is_seeded() {
        let maps: Vec<Vec<(usize, [u32; N_MODES])>> = (0..50)
            .map(|i| vec![(i % 5, [1 + (i % 3) as u32, (i % 2) as u32, 0, 0, 0, 0, 0])])
            .collect();
        let x = counts(maps);
        let all: Vec<usize> = (0..50).collect();
        let a = univocity_bootstrap(&x, &all, 30, 20, 9).unwrap();
        assert_eq!(a, univocity_bootstrap(&x, &all, 30, 20, 9).unwrap());
        assert!(a.ci_lo <= a.mean && a.mean <= a.ci_hi);
        let full = univocity_bootstrap(&x, &all, 5, 500, 9).unwrap();
        assert_eq!(full.sample_size, 50);
        assert_eq!(full.mean, univocity(&x, &all).unwrap());
    }

    proptest! {
        #[test]
        fn bounds_and_singleton_identity(raw in proptest::collection::vec(proptest::collection::vec((0usize..6, proptest::array::uniform7(0u32..5)), 1..6), 1..8)) {
            let x = counts(raw);
            let all: Vec<usize> = (0..x.n_maps()).collect();
            if let Ok(u) = univocity(&x, &all) {
                prop_assert!(u >= 1.0 / N_MODES as f64 - 1e-12 && u <= 1.0 + 1e-12);
            }
            for m in 0..x.n_maps() {
                prop_assert_eq!(univocity(&x, &[m]).ok(), univocity_per_map(&x, &[m]).ok());
            }
        }
    }
}

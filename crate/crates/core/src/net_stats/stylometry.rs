use std::collections::BTreeMap;

use rand::seq::{index::sample, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{NetStatsError, Result};
use crate::rng::stream_rng;
use crate::stats::{mean, pearson, percentile, sample_sd};
use crate::vectors::{cosine_distance, Vectors};

/// Icons of one map (row indices into an embedding table) and the
/// community of its creator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapIcons {
    pub community: usize,
    pub icons: Vec<usize>,
}

/// Symmetric map distance: mean `tanh` of the row minima plus mean `tanh`
/// of the column minima of the cosine-distance matrix between the icons of
/// `a` and `b`. NaN when either map has no icon.
pub fn map_distance(a: &[usize], b: &[usize], embeddings: &Vectors) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut col_min = vec![f64::INFINITY; b.len()];
    let mut rows = 0.0;
    for &i in a {
        let mut m = f64::INFINITY;
        for (x, &j) in b.iter().enumerate() {
            let d = cosine_distance(embeddings.row(i), embeddings.row(j));
            m = m.min(d);
            col_min[x] = col_min[x].min(d);
        }
        rows += m.tanh();
    }
    rows / a.len() as f64 + col_min.iter().map(|d| d.tanh()).sum::<f64>() / b.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchParams {
    pub batches: usize,
    pub batch_maps: usize,
    pub n_communities: usize,
    /// Icons kept per map (seeded subsample above the cap).
    pub icon_cap: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for BatchParams {
    fn default() -> Self {
        Self {
            batches: 17,
            batch_maps: 50,
            n_communities: 10,
            icon_cap: 128,
            repetitions: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoB {
    /// Mean over repetitions of the per-repetition batch mean.
    pub mean: f64,
    pub sd: f64,
    /// 2.5/97.5 percentiles over repetitions.
    pub ci: (f64, f64),
    pub per_repetition: Vec<f64>,
    /// Batches where the correlation is undefined.
    pub skipped_batches: usize,
}

fn capped(icons: &[usize], cap: usize, seed: u64, map: usize) -> Vec<usize> {
    if icons.len() <= cap {
        return icons.to_vec();
    }
    let mut idx = sample(&mut stream_rng(seed ^ 0x1c0, map as u64), icons.len(), cap).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| icons[i]).collect()
}

/// Correlation between map distances and the different-community
/// indicator, over batches of maps sampled round-robin from a random
/// subset of communities.
pub fn community_distance_test(maps: &[MapIcons], embeddings: &Vectors, params: &BatchParams) -> Result<RhoB> {
    if params.batches == 0 || params.repetitions == 0 || params.batch_maps < 2 || params.n_communities < 2 {
        return Err(NetStatsError::InvalidParam(
            "batches, repetitions ≥ 1; batch_maps, n_communities ≥ 2".into(),
        ));
    }
    if let Some(&bad) = maps.iter().flat_map(|m| &m.icons).find(|&&i| i >= embeddings.len()) {
        return Err(NetStatsError::InvalidParam(format!("icon index {bad} out of range")));
    }
    let icons: Vec<Vec<usize>> = maps
        .iter()
        .enumerate()
        .map(|(i, m)| capped(&m.icons, params.icon_cap, params.seed, i))
        .collect();
    let mut by_comm: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, m) in maps.iter().enumerate() {
        if !icons[i].is_empty() {
            by_comm.entry(m.community).or_default().push(i);
        }
    }
    if by_comm.len() < 2 {
        return Err(NetStatsError::SingletonBatch);
    }
    let comms: Vec<usize> = by_comm.keys().copied().collect();
    let mut per_repetition = Vec::with_capacity(params.repetitions);
    let mut skipped = 0;
    for r in 0..params.repetitions {
        let mut rho = Vec::with_capacity(params.batches);
        for b in 0..params.batches {
            let mut rng = stream_rng(params.seed, (r * params.batches + b) as u64);
            let mut chosen = comms.clone();
            chosen.shuffle(&mut rng);
            chosen.truncate(params.n_communities);
            let mut pools: Vec<Vec<usize>> = chosen
                .iter()
                .map(|c| {
                    let mut p = by_comm[c].clone();
                    p.shuffle(&mut rng);
                    p
                })
                .collect();
            let mut batch = Vec::with_capacity(params.batch_maps);
            while batch.len() < params.batch_maps && pools.iter().any(|p| !p.is_empty()) {
                for p in pools.iter_mut() {
                    if batch.len() == params.batch_maps {
                        break;
                    }
                    if let Some(m) = p.pop() {
                        batch.push(m);
                    }
                }
            }
            let (mut d, mut delta) = (Vec::new(), Vec::new());
            for x in 1..batch.len() {
                for y in 0..x {
                    let (i, j) = (batch[x], batch[y]);
                    d.push(map_distance(&icons[i], &icons[j], embeddings));
                    delta.push(f64::from(maps[i].community != maps[j].community));
                }
            }
            match pearson(&d, &delta) {
                Some(v) if v.is_finite() => rho.push(v),
                _ => skipped += 1,
            }
        }
        per_repetition.push(if rho.is_empty() { f64::NAN } else { mean(&rho) });
    }
    let ok: Vec<f64> = per_repetition.iter().copied().filter(|v| v.is_finite()).collect();
    let (m, sd, ci) = if ok.is_empty() {
        (f64::NAN, f64::NAN, (f64::NAN, f64::NAN))
    } else {
        let sd = if ok.len() > 1 { sample_sd(&ok) } else { 0.0 };
        (mean(&ok), sd, (percentile(&ok, 2.5), percentile(&ok, 97.5)))
    };
    Ok(RhoB {
        mean: m,
        sd,
        ci,
        per_repetition,
        skipped_batches: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_embeddings(n: usize, dim: usize, seed: u64) -> Vectors {
        let mut rng = rng_from(seed);
        let data = (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Vectors::new(dim, data)
    }

    #[test]
    fn map_distance_basics() {
        let e = Vectors::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert_eq!(map_distance(&[0, 1], &[1, 0], &e), 0.0);
        let d = map_distance(&[0], &[1], &e);
        assert!((d - 2.0 * 1f64.tanh()).abs() < 1e-12);
        assert!((map_distance(&[0, 2], &[1], &e) - map_distance(&[1], &[0, 2], &e)).abs() < 1e-15);
        assert!(map_distance(&[], &[1], &e).is_nan());
    }

    #[test]
    fn disjoint_vocabularies_separate() {
        // one-hot icons: every cross-community pair sits at 2·tanh(1)
        let e = Vectors::new(40, (0..1600).map(|i| f64::from(i % 41 == 0)).collect());
        // community c uses icons 10c..10c+10, each map the full set
        let maps: Vec<MapIcons> = (0..60)
            .map(|i| MapIcons {
                community: i % 4,
                icons: (10 * (i % 4)..10 * (i % 4) + 10).collect(),
            })
            .collect();
        let p = BatchParams {
            batches: 4,
            batch_maps: 20,
            n_communities: 3,
            repetitions: 3,
            ..Default::default()
        };
        let r = community_distance_test(&maps, &e, &p).unwrap();
        assert!((r.mean - 1.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn iid_icons_give_no_signal() {
        let e = random_embeddings(500, 16, 2);
        let mut rng = rng_from(3);
        let maps: Vec<MapIcons> = (0..200)
            .map(|i| MapIcons {
                community: i % 5,
                icons: (0..20).map(|_| rng.random_range(0..500)).collect(),
            })
            .collect();
        let p = BatchParams {
            batches: 5,
            batch_maps: 30,
            n_communities: 5,
            repetitions: 4,
            ..Default::default()
        };
        let r = community_distance_test(&maps, &e, &p).unwrap();
        assert!(r.mean.abs() < 0.1, "{r:?}");
    }

    #[test]
    fn single_community_is_rejected() {
        let e = random_embeddings(4, 3, 4);
        let maps = vec![
            MapIcons {
                community: 7,
                icons: vec![0, 1],
            };
            5
        ];
        assert_eq!(
            community_distance_test(&maps, &e, &BatchParams::default()),
            Err(NetStatsError::SingletonBatch)
        );
    }

    #[test]
    fn relabelling_communities_is_invariant() {
        let e = random_embeddings(60, 8, 5);
        let mut rng = rng_from(6);
        let maps: Vec<MapIcons> = (0..40)
            .map(|i| MapIcons {
                community: i % 3,
                icons: (0..6).map(|_| 20 * (i % 3) + rng.random_range(0..25)).map(|x| x % 60).collect(),
            })
            .collect();
        let relabelled: Vec<MapIcons> = maps
            .iter()
            .map(|m| MapIcons {
                community: 100 + 7 * m.community,
                ..m.clone()
            })
            .collect();
        let p = BatchParams {
            batches: 3,
            batch_maps: 15,
            repetitions: 2,
            ..Default::default()
        };
        assert_eq!(
            community_distance_test(&maps, &e, &p).unwrap(),
            community_distance_test(&relabelled, &e, &p).unwrap()
        );
    }
}

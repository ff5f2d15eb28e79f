use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::strata::{normalize_column, rupture_semantic};
use super::{mode_slot, Result, SemioticsError, SignCorpus, N_MODES};
use crate::stats::{mean, sample_sd};

/// Normalized per-mode cluster columns for each group. `group_of` maps a
/// map index to a group slot.
fn group_tables(corpus: &SignCorpus, group_of: impl Fn(usize) -> Option<usize>, n_groups: usize, semantic: bool) -> Vec<Vec<Vec<f64>>> {
    let k = if semantic { N_MODES } else { 1 };
    let mut counts = vec![vec![vec![0u64; corpus.n_clusters]; k]; n_groups];
    for s in &corpus.signs {
        let Some(g) = group_of(s.map) else { continue };
        let slot = if semantic {
            match s.mode.and_then(mode_slot) {
                Some(k) => k,
                None => continue,
            }
        } else {
            0
        };
        counts[g][slot][s.cluster] += 1;
    }
    counts
        .into_iter()
        .map(|modes| modes.iter().map(|c| normalize_column(c)).collect())
        .collect()
}

fn pair_rho(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    rupture_semantic(a, b).map_or(f64::NAN, |r| r.rho)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuptureMatrix {
    pub groups: Vec<String>,
    /// Maps per retained group.
    pub records: Vec<usize>,
    /// Symmetric, zero diagonal; NaN when neither group has any sign.
    pub rho: Vec<Vec<f64>>,
}

/// Pairwise rupture between groups of maps (e.g. publication cities)
/// holding at least `min_records` maps.
pub fn geographic_rupture_matrix(
    corpus: &SignCorpus,
    map_groups: &[Option<String>],
    min_records: usize,
    semantic: bool,
) -> Result<RuptureMatrix> {
    if map_groups.len() != corpus.n_maps() {
        return Err(SemioticsError::DimensionMismatch {
            expected: corpus.n_maps(),
            got: map_groups.len(),
        });
    }
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for g in map_groups.iter().flatten() {
        *sizes.entry(g.as_str()).or_insert(0) += 1;
    }
    let kept: Vec<(&str, usize)> = sizes.into_iter().filter(|&(_, n)| n >= min_records).collect();
    if kept.len() < 2 {
        return Err(SemioticsError::TooFewGroups(kept.len()));
    }
    let slot: BTreeMap<&str, usize> = kept.iter().enumerate().map(|(i, &(g, _))| (g, i)).collect();
    let tables = group_tables(
        corpus,
        |m| map_groups[m].as_deref().and_then(|g| slot.get(g).copied()),
        kept.len(),
        semantic,
    );
    let n = kept.len();
    let mut rho = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = pair_rho(&tables[i], &tables[j]);
            rho[i][j] = r;
            rho[j][i] = r;
        }
    }
    Ok(RuptureMatrix {
        groups: kept.iter().map(|(g, _)| g.to_string()).collect(),
        records: kept.iter().map(|&(_, n)| n).collect(),
        rho,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowNode {
    pub stratum: usize,
    pub group: String,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEdge {
    /// Edge from `from_group` in `stratum` to `to_group` in `stratum + 1`.
    pub stratum: usize,
    pub from_group: String,
    pub to_group: String,
    pub rho: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiachronicFlow {
    /// `(first year, last year, maps)` per stratum.
    pub strata: Vec<(f64, f64, usize)>,
    pub nodes: Vec<FlowNode>,
    pub edges: Vec<FlowEdge>,
    /// `(mean, sd, pairs)` of ρ over all group pairs of each transition.
    pub transition_stats: Vec<(f64, f64, usize)>,
}

/// Rupture flow between groups across `n_strata` equal-count time strata.
/// For each consecutive pair of strata every (group at t, group at t+1)
/// pair is compared; an edge is kept when its ρ is below
/// `mean − 1.96·sd/√pairs` of that transition.
pub fn diachronic_flow(
    corpus: &SignCorpus,
    map_years: &[Option<f64>],
    map_groups: &[Option<String>],
    n_strata: usize,
    min_records: usize,
    semantic: bool,
) -> Result<DiachronicFlow> {
    if map_years.len() != corpus.n_maps() || map_groups.len() != corpus.n_maps() {
        return Err(SemioticsError::DimensionMismatch {
            expected: corpus.n_maps(),
            got: map_years.len().min(map_groups.len()),
        });
    }
    if n_strata < 2 {
        return Err(SemioticsError::InvalidParam("need at least two strata".into()));
    }
    let mut maps: Vec<(f64, usize)> = (0..corpus.n_maps())
        .filter_map(|m| Some((map_years[m].filter(|y| y.is_finite())?, m)))
        .filter(|&(_, m)| map_groups[m].is_some())
        .collect();
    maps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if maps.len() < n_strata {
        return Err(SemioticsError::InsufficientData(0));
    }
    let mut stratum_of = vec![None; corpus.n_maps()];
    let mut strata = Vec::with_capacity(n_strata);
    for s in 0..n_strata {
        let (lo, hi) = (s * maps.len() / n_strata, (s + 1) * maps.len() / n_strata);
        for &(_, m) in &maps[lo..hi] {
            stratum_of[m] = Some(s);
        }
        strata.push((maps[lo].0, maps[hi - 1].0, hi - lo));
    }

    // retained (stratum, group) cells
    let mut sizes: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    for m in 0..corpus.n_maps() {
        if let (Some(s), Some(g)) = (stratum_of[m], map_groups[m].as_deref()) {
            *sizes.entry((s, g)).or_insert(0) += 1;
        }
    }
    let cells: Vec<((usize, &str), usize)> = sizes.into_iter().filter(|&(_, n)| n >= min_records).collect();
    let slot: BTreeMap<(usize, &str), usize> = cells.iter().enumerate().map(|(i, &(k, _))| (k, i)).collect();
    let tables = group_tables(
        corpus,
        |m| {
            let key = (stratum_of[m]?, map_groups[m].as_deref()?);
            slot.get(&key).copied()
        },
        cells.len(),
        semantic,
    );
    let nodes = cells
        .iter()
        .map(|&((s, g), n)| FlowNode {
            stratum: s,
            group: g.to_string(),
            records: n,
        })
        .collect();

    let mut edges = Vec::new();
    let mut transition_stats = Vec::new();
    for t in 0..n_strata - 1 {
        let from: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].0 .0 == t).collect();
        let to: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].0 .0 == t + 1).collect();
        let mut pairs = Vec::new();
        for &a in &from {
            for &b in &to {
                let r = pair_rho(&tables[a], &tables[b]);
                if r.is_finite() {
                    pairs.push((a, b, r));
                }
            }
        }
        let rhos: Vec<f64> = pairs.iter().map(|p| p.2).collect();
        let (mu, sd) = (mean(&rhos), sample_sd(&rhos));
        transition_stats.push((mu, sd, rhos.len()));
        if rhos.len() < 2 {
            continue;
        }
        let threshold = mu - 1.96 * sd / (rhos.len() as f64).sqrt();
        for (a, b, r) in pairs {
            if r < threshold {
                edges.push(FlowEdge {
                    stratum: t,
                    from_group: cells[a].0 .1.to_string(),
                    to_group: cells[b].0 .1.to_string(),
                    rho: r,
                    threshold,
                });
            }
        }
    }
    Ok(DiachronicFlow {
        strata,
        nodes,
        edges,
        transition_stats,
    })
}

#[cfg(test)]
mod tests {
    use super::super::Sign;
    use super::*;
    use crate::image_ops::SemanticMode;
    use crate::rng::rng_from;
    use rand::Rng;

    fn sign(map: usize, cluster: usize, mode: SemanticMode) -> Sign {
        Sign {
            map,
            cluster,
            mode: Some(mode),
        }
    }

    #[test]
    fn identical_and_disjoint_groups() {
        // maps 0,1 in A; 2,3 in B; 4,5 in C. A and B identical, C disjoint.
        let mut signs = Vec::new();
        for m in 0..4 {
            signs.push(sign(m, 0, SemanticMode::Water));
            signs.push(sign(m, 1, SemanticMode::Road));
        }
        for m in 4..6 {
            signs.push(sign(m, 2, SemanticMode::Water));
            signs.push(sign(m, 3, SemanticMode::Road));
        }
        let corpus = SignCorpus {
            n_clusters: 4,
            map_ids: (0..6).map(|i| i.to_string()).collect(),
            signs,
        };
        let groups: Vec<Option<String>> = ["A", "A", "B", "B", "C", "C"].iter().map(|g| Some(g.to_string())).collect();
        let g = geographic_rupture_matrix(&corpus, &groups, 2, true).unwrap();
        assert_eq!(g.groups, vec!["A", "B", "C"]);
        assert_eq!(g.rho[0][1], 0.0);
        // per mode: water (1,0,0,0) vs (0,0,1,0) → 2/4; same for road
        assert_eq!(g.rho[0][2], 0.5);
        assert_eq!(g.rho[2][0], 0.5);
        assert_eq!(
            geographic_rupture_matrix(&corpus, &groups, 3, true),
            Err(SemioticsError::TooFewGroups(0))
        );
    }

    #[test]
    fn matrix_is_symmetric() {
        let mut rng = rng_from(3);
        let n_maps = 60;
        let signs = (0..600)
            .map(|_| sign(rng.random_range(0..n_maps), rng.random_range(0..12), SemanticMode::ALL[rng.random_range(0..8)]))
            .collect();
        let corpus = SignCorpus {
            n_clusters: 12,
            map_ids: (0..n_maps).map(|i| i.to_string()).collect(),
            signs,
        };
        let groups: Vec<Option<String>> = (0..n_maps).map(|m| Some(format!("g{}", m % 5))).collect();
        let g = geographic_rupture_matrix(&corpus, &groups, 1, true).unwrap();
        for i in 0..5 {
            assert_eq!(g.rho[i][i], 0.0);
            for j in 0..5 {
                assert_eq!(g.rho[i][j], g.rho[j][i]);
                assert!((0.0..=1.0).contains(&g.rho[i][j]));
            }
        }
    }

    #[test]
    fn identical_cities_tie() {
        // two strata, two cities with the same signs everywhere
        let mut signs = Vec::new();
        for m in 0..8 {
            signs.push(sign(m, m % 2, SemanticMode::Built));
        }
        let corpus = SignCorpus {
            n_clusters: 2,
            map_ids: (0..8).map(|i| i.to_string()).collect(),
            signs,
        };
        let years: Vec<Option<f64>> = (0..8).map(|m| Some(if m < 4 { 1800.0 } else { 1900.0 })).collect();
        let groups: Vec<Option<String>> = (0..8).map(|m| Some(if m % 4 < 2 { "X" } else { "Y" }.to_string())).collect();
        // maps 0,1 → X (clusters 0,1); 2,3 → Y (0,1): identical tables
        let f = diachronic_flow(&corpus, &years, &groups, 2, 1, true).unwrap();
        assert_eq!(f.nodes.len(), 4);
        assert_eq!(f.transition_stats[0], (0.0, 0.0, 4));
        // no pair is below the mean when every ρ ties
        assert!(f.edges.is_empty());
        assert_eq!(f.strata[0], (1800.0, 1800.0, 4));
    }

    #[test]
    fn stationary_city_gets_self_edge() {
        let mut rng = rng_from(11);
        let cities = ["Stable", "R1", "R2", "R3", "R4", "R5"];
        let n_maps = 6 * 6 * 10;
        let mut signs = Vec::new();
        let mut years = Vec::new();
        let mut groups = Vec::new();
        for m in 0..n_maps {
            let city = m % 6;
            let stratum = m / 60;
            years.push(Some(1800.0 + stratum as f64 * 10.0 + (m % 10) as f64 * 0.1));
            groups.push(Some(cities[city].to_string()));
            for _ in 0..20 {
                let c = if city == 0 { rng.random_range(0..5) } else { rng.random_range(0..40) };
                signs.push(sign(m, c, SemanticMode::Built));
            }
        }
        let corpus = SignCorpus {
            n_clusters: 40,
            map_ids: (0..n_maps).map(|i| i.to_string()).collect(),
            signs,
        };
        let f = diachronic_flow(&corpus, &years, &groups, 6, 5, true).unwrap();
        for t in 0..5 {
            assert!(
                f.edges.iter().any(|e| e.stratum == t && e.from_group == "Stable" && e.to_group == "Stable"),
                "missing self edge at {t}"
            );
        }
    }
}

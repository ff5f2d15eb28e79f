use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{mode_slot, Result, SemioticsError, SignCorpus, N_MODES};
use crate::image_ops::SemanticMode;
use crate::rng::stream_rng;
use crate::stats::{percentile, percentile_sorted};

/// Cluster × stratum counts with their saturated normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrataTable {
    /// `counts[m][s]`.
    pub counts: Vec<Vec<u64>>,
    /// `min(counts / P95 of the stratum column, 1)`.
    pub normalized: Vec<Vec<f64>>,
    pub strata_labels: Vec<String>,
    pub mode: Option<SemanticMode>,
    /// Strata that received no sign.
    pub empty_strata: Vec<usize>,
}

/// Restricts a table to signs of one semantic mode.
#[derive(Debug, Clone, Copy)]
pub struct ModeFilter<'a> {
    /// Mode of each item, aligned with the assignments.
    pub modes: &'a [Option<SemanticMode>],
    pub keep: SemanticMode,
}

/// Saturated normalization of one stratum column. The 95th percentile uses
/// linear interpolation; a zero percentile maps present clusters to 1.
pub fn normalize_column(counts: &[u64]) -> Vec<f64> {
    let vals: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let p95 = percentile(&vals, 95.0);
    vals.iter()
        .map(|&c| {
            if c == 0.0 {
                0.0
            } else if p95 > 0.0 {
                (c / p95).min(1.0)
            } else {
                1.0
            }
        })
        .collect()
}

impl StrataTable {
    pub fn from_counts(counts: Vec<Vec<u64>>, strata_labels: Vec<String>, mode: Option<SemanticMode>) -> Self {
        let s = strata_labels.len();
        assert!(counts.iter().all(|r| r.len() == s), "ragged strata table");
        let m = counts.len();
        let mut normalized = vec![vec![0.0; s]; m];
        let mut empty_strata = Vec::new();
        for j in 0..s {
            let col: Vec<u64> = counts.iter().map(|r| r[j]).collect();
            if col.iter().all(|&c| c == 0) {
                empty_strata.push(j);
            }
            for (i, v) in normalize_column(&col).into_iter().enumerate() {
                normalized[i][j] = v;
            }
        }
        Self {
            counts,
            normalized,
            strata_labels,
            mode,
            empty_strata,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.counts.len()
    }

    pub fn n_strata(&self) -> usize {
        self.strata_labels.len()
    }

    pub fn column(&self, s: usize) -> Vec<f64> {
        self.normalized.iter().map(|r| r[s]).collect()
    }

    /// Fails on the first empty stratum.
    pub fn require_nonempty(&self) -> Result<()> {
        match self.empty_strata.first() {
            Some(&s) => Err(SemioticsError::EmptyStratum(s)),
            None => Ok(()),
        }
    }
}

fn keep_item(filter: &Option<ModeFilter<'_>>, i: usize) -> bool {
    filter.as_ref().is_none_or(|f| f.modes[i] == Some(f.keep))
}

/// Counts signs per cluster in the strata `[e_s, e_{s+1})` (the last one
/// closed). Items outside the edges, or with a NaN value, are ignored.
pub fn build_strata_table(
    assignments: &[usize],
    strat_values: &[f64],
    strata_edges: &[f64],
    n_clusters: usize,
    mode_filter: Option<ModeFilter<'_>>,
) -> Result<StrataTable> {
    if strat_values.len() != assignments.len() {
        return Err(SemioticsError::DimensionMismatch {
            expected: assignments.len(),
            got: strat_values.len(),
        });
    }
    if let Some(f) = &mode_filter {
        if f.modes.len() != assignments.len() {
            return Err(SemioticsError::DimensionMismatch {
                expected: assignments.len(),
                got: f.modes.len(),
            });
        }
    }
    if strata_edges.len() < 2 || strata_edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SemioticsError::InvalidParam("strata edges must be strictly increasing".into()));
    }
    let s = strata_edges.len() - 1;
    let mut counts = vec![vec![0u64; s]; n_clusters];
    for (i, (&c, &v)) in assignments.iter().zip(strat_values).enumerate() {
        if c >= n_clusters || !keep_item(&mode_filter, i) {
            continue;
        }
        let hi = strata_edges[s];
        if !(v >= strata_edges[0] && v <= hi) {
            continue;
        }
        let j = if v == hi {
            s - 1
        } else {
            strata_edges.partition_point(|&e| e <= v) - 1
        };
        counts[c][j] += 1;
    }
    let labels = strata_edges.windows(2).map(|w| format!("[{}, {})", w[0], w[1])).collect();
    Ok(StrataTable::from_counts(counts, labels, mode_filter.map(|f| f.keep)))
}

/// Table over categorical strata (country, city, creator); strata are the
/// distinct categories in lexicographic order.
pub fn build_category_table(
    assignments: &[usize],
    categories: &[Option<String>],
    n_clusters: usize,
    mode_filter: Option<ModeFilter<'_>>,
) -> Result<StrataTable> {
    if categories.len() != assignments.len() {
        return Err(SemioticsError::DimensionMismatch {
            expected: assignments.len(),
            got: categories.len(),
        });
    }
    let labels: Vec<String> = categories
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut counts = vec![vec![0u64; labels.len()]; n_clusters];
    for (i, (&c, cat)) in assignments.iter().zip(categories).enumerate() {
        let Some(cat) = cat else { continue };
        if c >= n_clusters || !keep_item(&mode_filter, i) {
            continue;
        }
        let j = labels.binary_search(cat).expect("label present");
        counts[c][j] += 1;
    }
    Ok(StrataTable::from_counts(counts, labels, mode_filter.map(|f| f.keep)))
}

/// `χ[m][s] = ln(C̃[m][s] / μ_s)` with `μ_s` the column mean of C̃; zero
/// cells are `-inf`.
pub fn characteristicity(table: &StrataTable) -> Vec<Vec<f64>> {
    let m = table.n_clusters();
    let mut chi = vec![vec![f64::NEG_INFINITY; table.n_strata()]; m];
    if m == 0 {
        return chi;
    }
    for s in 0..table.n_strata() {
        let mu = table.normalized.iter().map(|r| r[s]).sum::<f64>() / m as f64;
        for (i, row) in table.normalized.iter().enumerate() {
            if row[s] > 0.0 {
                chi[i][s] = (row[s] / mu).ln();
            }
        }
    }
    chi
}

/// The `k` most characteristic clusters of stratum `s`, highest first,
/// ties by cluster index. `-inf` entries never rank.
pub fn top_characteristic(chi: &[Vec<f64>], s: usize, k: usize) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = chi
        .iter()
        .enumerate()
        .map(|(m, r)| (m, r[s]))
        .filter(|(_, x)| x.is_finite())
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

/// Coefficient of rupture: mean absolute difference of two normalized
/// stratum columns.
pub fn rupture(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SemioticsError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticRupture {
    pub rho: f64,
    /// Per-mode ρ; `None` for skipped modes.
    pub per_mode: Vec<Option<f64>>,
    pub skipped: Vec<usize>,
}

/// Semantic rupture: mean of the per-mode coefficients over modes with
/// mass on at least one side.
pub fn rupture_semantic(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<SemanticRupture> {
    if a.len() != b.len() {
        return Err(SemioticsError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut per_mode = Vec::with_capacity(a.len());
    let mut skipped = Vec::new();
    for (k, (ta, tb)) in a.iter().zip(b).enumerate() {
        let mass = ta.iter().sum::<f64>() + tb.iter().sum::<f64>();
        if mass > 0.0 {
            per_mode.push(Some(rupture(ta, tb)?));
        } else {
            per_mode.push(None);
            skipped.push(k);
        }
    }
    let active: Vec<f64> = per_mode.iter().flatten().copied().collect();
    if active.is_empty() {
        return Err(SemioticsError::NoActiveMode);
    }
    Ok(SemanticRupture {
        rho: active.iter().sum::<f64>() / active.len() as f64,
        per_mode,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuptureCurveParams {
    pub window_steps: usize,
    /// Stratum size as a share of the sorted signs.
    pub stratum_frac: f64,
    /// Share of a stratum shared by the trailing and leading strata.
    pub overlap_frac: f64,
    /// Bootstrap replicates over clusters; 0 disables the interval.
    pub bootstrap_n: usize,
    /// Average per-mode ruptures (signs without a mode 1–7 are dropped).
    pub semantic: bool,
    pub seed: u64,
}

impl Default for RuptureCurveParams {
    fn default() -> Self {
        Self {
            window_steps: 200,
            stratum_frac: 0.05,
            overlap_frac: 0.5,
            bootstrap_n: 1000,
            semantic: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Stratification value at the centre of the stratum pair.
    pub position: f64,
    /// Index of that centre among the sorted signs.
    pub center_index: usize,
    pub rho: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Per-cluster absolute differences between two sets of signs, averaged
/// over the modes active on either side.
fn cluster_diffs(items: &[(usize, usize)], a: std::ops::Range<usize>, b: std::ops::Range<usize>, m: usize, k: usize) -> Option<Vec<f64>> {
    let count = |r: std::ops::Range<usize>| {
        let mut c = vec![vec![0u64; m]; k];
        for &(cl, slot) in &items[r] {
            c[slot][cl] += 1;
        }
        c
    };
    let (ca, cb) = (count(a), count(b));
    let mut d = vec![0.0; m];
    let mut active = 0;
    for slot in 0..k {
        if ca[slot].iter().all(|&x| x == 0) && cb[slot].iter().all(|&x| x == 0) {
            continue;
        }
        active += 1;
        let (na, nb) = (normalize_column(&ca[slot]), normalize_column(&cb[slot]));
        for i in 0..m {
            d[i] += (na[i] - nb[i]).abs();
        }
    }
    if active == 0 {
        return None;
    }
    d.iter_mut().for_each(|x| *x /= active as f64);
    Some(d)
}

/// Rupture between trailing and leading strata slid across the signs
/// sorted by their map's stratification value. Each stratum holds
/// `stratum_frac` of the signs; the leading stratum starts
/// `(1 − overlap_frac)` of a stratum after the trailing one.
pub fn rupture_curve(
    corpus: &SignCorpus,
    map_values: &[Option<f64>],
    params: &RuptureCurveParams,
) -> Result<Vec<CurvePoint>> {
    if map_values.len() != corpus.n_maps() {
        return Err(SemioticsError::DimensionMismatch {
            expected: corpus.n_maps(),
            got: map_values.len(),
        });
    }
    if !(params.stratum_frac > 0.0 && params.stratum_frac <= 0.5) || !(0.0..1.0).contains(&params.overlap_frac) {
        return Err(SemioticsError::InvalidParam("stratum_frac in (0, 0.5], overlap_frac in [0, 1)".into()));
    }
    if params.window_steps == 0 {
        return Err(SemioticsError::InvalidParam("window_steps must be positive".into()));
    }
    // (value, map, sign index) → sorted (cluster, mode slot)
    let mut keyed: Vec<(f64, usize, usize, usize, usize)> = Vec::new();
    for (i, s) in corpus.signs.iter().enumerate() {
        let Some(v) = map_values[s.map].filter(|v| v.is_finite()) else { continue };
        let slot = if params.semantic {
            match s.mode.and_then(mode_slot) {
                Some(k) => k,
                None => continue,
            }
        } else {
            0
        };
        keyed.push((v, s.map, i, s.cluster, slot));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let values: Vec<f64> = keyed.iter().map(|k| k.0).collect();
    let items: Vec<(usize, usize)> = keyed.iter().map(|k| (k.3, k.4)).collect();
    let n = items.len();
    let w = ((params.stratum_frac * n as f64).round() as usize).max(1);
    let shift = (((1.0 - params.overlap_frac) * w as f64).round() as usize).max(1);
    let span = shift + w;
    if n < span {
        return Err(SemioticsError::InsufficientData(0));
    }
    let k = if params.semantic { N_MODES } else { 1 };
    let steps = params.window_steps;
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let p = if steps == 1 {
            0
        } else {
            ((t as f64) * (n - span) as f64 / (steps - 1) as f64).round() as usize
        };
        let d = cluster_diffs(&items, p..p + w, p + shift..p + span, corpus.n_clusters, k)
            .ok_or(SemioticsError::InsufficientData(t))?;
        let m = d.len().max(1) as f64;
        let rho = d.iter().sum::<f64>() / m;
        let (ci_lo, ci_hi) = if params.bootstrap_n == 0 || d.is_empty() {
            (rho, rho)
        } else {
            let mut rng = stream_rng(params.seed, t as u64);
            let mut reps: Vec<f64> = (0..params.bootstrap_n)
                .map(|_| (0..d.len()).map(|_| d[rng.random_range(0..d.len())]).sum::<f64>() / m)
                .collect();
            reps.sort_by(f64::total_cmp);
            (percentile_sorted(&reps, 2.5), percentile_sorted(&reps, 97.5))
        };
        let center_index = p + span / 2;
        out.push(CurvePoint {
            position: values[center_index.min(n - 1)],
            center_index,
            rho,
            ci_lo,
            ci_hi,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::Sign;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton_columns_saturate() {
        let t = StrataTable::from_counts(vec![vec![4, 6]], vec!["a".into(), "b".into()], None);
        assert_eq!(t.normalized, vec![vec![1.0, 1.0]]);
    }

    #[test]
    fn zero_column() {
        let t = StrataTable::from_counts(vec![vec![0, 3], vec![0, 1]], vec!["a".into(), "b".into()], None);
        assert_eq!(t.column(0), vec![0.0, 0.0]);
        assert_eq!(t.empty_strata, vec![0]);
        assert_eq!(t.require_nonempty(), Err(SemioticsError::EmptyStratum(0)));
    }

    #[test]
    fn outlier_saturates() {
        // 99 clusters with counts 1..=99 plus one outlier of 10_000
        let mut counts: Vec<Vec<u64>> = (1..=99).map(|c| vec![c]).collect();
        counts.push(vec![10_000]);
        let t = StrataTable::from_counts(counts, vec!["s".into()], None);
        // sorted values: 1..=99, 10000; h = 99·0.95 = 94.05 → 95 + 0.05·1
        let p95 = 95.05;
        assert_eq!(t.normalized[99][0], 1.0);
        assert!((t.normalized[9][0] - 10.0 / p95).abs() < 1e-12);
        assert_eq!(t.normalized[98][0], 1.0);
    }

    #[test]
    fn edges_bin_items() {
        let t = build_strata_table(&[0, 1, 1, 0], &[1800.0, 1850.0, 1900.0, 1700.0], &[1800.0, 1850.0, 1900.0], 2, None)
            .unwrap();
        assert_eq!(t.counts, vec![vec![1, 0], vec![0, 2]]);
        assert!(build_strata_table(&[0], &[1.0], &[2.0, 1.0], 1, None).is_err());
        let modes = [Some(SemanticMode::Water), None, Some(SemanticMode::Water), None];
        let f = ModeFilter {
            modes: &modes,
            keep: SemanticMode::Water,
        };
        let t = build_strata_table(&[0, 1, 1, 0], &[1800.0, 1850.0, 1900.0, 1700.0], &[1800.0, 1850.0, 1900.0], 2, Some(f))
            .unwrap();
        assert_eq!(t.counts, vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(t.mode, Some(SemanticMode::Water));
    }

    #[test]
    fn categories_are_sorted() {
        let cats = [Some("Paris".to_string()), Some("Berlin".to_string()), None];
        let t = build_category_table(&[0, 0, 0], &cats, 1, None).unwrap();
        assert_eq!(t.strata_labels, vec!["Berlin", "Paris"]);
        assert_eq!(t.counts, vec![vec![1, 1]]);
    }

    #[test]
    fn chi_cases() {
        let t = StrataTable::from_counts(vec![vec![2], vec![2], vec![2]], vec!["s".into()], None);
        assert!(characteristicity(&t).iter().all(|r| r[0] == 0.0));
        let mut t = StrataTable::from_counts(vec![vec![1], vec![1]], vec!["s".into()], None);
        t.normalized = vec![vec![1.0], vec![0.0]];
        let chi = characteristicity(&t);
        assert!((chi[0][0] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(chi[1][0], f64::NEG_INFINITY);
        assert_eq!(top_characteristic(&chi, 0, 5), vec![(0, chi[0][0])]);
    }

    #[test]
    fn rupture_cases() {
        assert_eq!(rupture(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rupture(&[0.3, 0.2], &[0.3, 0.2]).unwrap(), 0.0);
        assert!(rupture(&[1.0], &[1.0, 0.0]).is_err());
        let same = vec![vec![1.0, 0.5], vec![0.0, 0.2]];
        let diff = vec![vec![1.0, 0.5], vec![0.2, 0.0]];
        let r = rupture_semantic(&same, &diff).unwrap();
        assert!((r.rho - 0.1).abs() < 1e-15);
        let zero = vec![vec![0.0, 0.0]];
        assert_eq!(rupture_semantic(&zero, &zero), Err(SemioticsError::NoActiveMode));
        let a = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        let b = vec![vec![0.0, 1.0], vec![0.5, 0.5]];
        assert_eq!(rupture_semantic(&a, &b).unwrap().rho, 0.5);
        let a = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        let r = rupture_semantic(&a, &a).unwrap();
        assert_eq!(r.skipped, vec![1]);
        assert_eq!(r.rho, 0.0);
    }

    fn corpus_from(items: &[(f64, usize)]) -> (SignCorpus, Vec<Option<f64>>) {
        let corpus = SignCorpus {
            n_clusters: items.iter().map(|i| i.1).max().unwrap_or(0) + 1,
            map_ids: (0..items.len()).map(|i| format!("m{i}")).collect(),
            signs: items
                .iter()
                .enumerate()
                .map(|(i, &(_, c))| Sign {
                    map: i,
                    cluster: c,
                    mode: None,
                })
                .collect(),
        };
        (corpus, items.iter().map(|i| Some(i.0)).collect())
    }

    #[test]
    fn repeating_pattern_has_zero_rupture() {
        // every stratum holds the same cluster mix
        let items: Vec<(f64, usize)> = (0..400).map(|i| (i as f64, i % 4)).collect();
        let (c, v) = corpus_from(&items);
        let p = RuptureCurveParams {
            window_steps: 10,
            stratum_frac: 0.1,
            bootstrap_n: 50,
            ..Default::default()
        };
        let curve = rupture_curve(&c, &v, &p).unwrap();
        assert_eq!(curve.len(), 10);
        assert!(curve.iter().all(|pt| pt.rho == 0.0 && pt.ci_lo == 0.0 && pt.ci_hi == 0.0));
        assert_eq!(curve[0].center_index, 30);
    }

    #[test]
    fn curve_is_seed_deterministic() {
        let items: Vec<(f64, usize)> = (0..300).map(|i| (i as f64, (i * 7 + i / 13) % 9)).collect();
        let (c, v) = corpus_from(&items);
        let p = RuptureCurveParams {
            window_steps: 20,
            bootstrap_n: 100,
            seed: 4,
            ..Default::default()
        };
        let a = rupture_curve(&c, &v, &p).unwrap();
        assert_eq!(a, rupture_curve(&c, &v, &p).unwrap());
        assert!(a.iter().all(|pt| pt.ci_lo <= pt.rho + 1e-12 && pt.rho <= pt.ci_hi + 1e-12));
    }

    #[test]
    fn too_few_signs() {
        let (c, v) = corpus_from(&[(1.0, 0)]);
        let p = RuptureCurveParams {
            stratum_frac: 0.5,
            ..Default::default()
        };
        // w = 1, shift = 1, span 2 > 1
        assert_eq!(rupture_curve(&c, &v, &p), Err(SemioticsError::InsufficientData(0)));
    }

    proptest! {
        #[test]
        fn chi_round_trip(counts in proptest::collection::vec(proptest::collection::vec(0u64..50, 3), 2..30)) {
            let t = StrataTable::from_counts(counts, vec!["a".into(), "b".into(), "c".into()], None);
            let chi = characteristicity(&t);
            let m = t.n_clusters() as f64;
            for s in 0..3 {
                let col = t.column(s);
                let mu = col.iter().sum::<f64>() / m;
                let back: f64 = chi.iter().map(|r| mu * r[s].exp()).sum();
                prop_assert!((back - col.iter().sum::<f64>()).abs() < 1e-9);
                for (i, r) in chi.iter().enumerate() {
                    if col[i] > 0.0 {
                        prop_assert!((r[s] - (col[i] / mu).ln()).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn normalized_in_unit_interval(counts in proptest::collection::vec(0u64..1000, 1..60)) {
            let n = normalize_column(&counts);
            prop_assert!(n.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!(n.iter().zip(&counts).all(|(&x, &c)| (x == 0.0) == (c == 0)));
        }
    }
}

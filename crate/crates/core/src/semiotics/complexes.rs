use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::SignCorpus;
use crate::graph::{louvain, WeightedGraph};

/// Table of `ln k!` for `k ≤ n`.
#[derive(Debug, Clone)]
pub struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub fn new(n: usize) -> Self {
        Self((0..=n as u64).map(ln_factorial).collect())
    }

    fn ensure(&mut self, n: usize) {
        if n >= self.0.len() {
            *self = Self::new(n);
        }
    }

    fn ln_choose(&self, n: u64, k: u64) -> f64 {
        self.0[n as usize] - self.0[k as usize] - self.0[(n - k) as usize]
    }
}

/// One-sided Fisher exact test for the 2×2 table `[[a, b], [c, d]]`:
/// `P(X ≥ a)` under the hypergeometric law with fixed margins.
pub fn fisher_exact_greater(table: [u64; 4], lf: &mut LnFactorials) -> f64 {
    let [a, b, c, d] = table;
    let n = a + b + c + d;
    lf.ensure(n as usize);
    let row1 = a + b;
    let col1 = a + c;
    let hi = row1.min(col1);
    if a <= col1.saturating_sub(n - row1) {
        // the whole support
        return 1.0;
    }
    let denom = lf.ln_choose(n, col1);
    let p: f64 = (a..=hi)
        .map(|x| (lf.ln_choose(row1, x) + lf.ln_choose(n - row1, col1 - x) - denom).exp())
        .sum();
    p.min(1.0)
}

/// Conditional odds ratio `ad / bc`; `+inf` when `bc = 0`.
pub fn odds_ratio(table: [u64; 4]) -> f64 {
    let [a, b, c, d] = table;
    let den = (b * c) as f64;
    if den == 0.0 {
        f64::INFINITY
    } else {
        (a * d) as f64 / den
    }
}

/// Benjamini–Hochberg adjusted p-values, in input order.
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut q = vec![0.0; m];
    let mut running = 1.0f64;
    for r in (0..m).rev() {
        let i = idx[r];
        running = running.min(p[i] * m as f64 / (r + 1) as f64);
        q[i] = running.min(1.0);
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComplexParams {
    /// Instances of a cluster needed for it to count as present in a map.
    pub presence_min: u32,
    pub alpha: f64,
    /// Threshold Benjamini–Hochberg q instead of raw p.
    pub bh: bool,
    pub seed: u64,
}

impl Default for ComplexParams {
    fn default() -> Self {
        Self {
            presence_min: 3,
            alpha: 0.01,
            bh: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub j: usize,
    pub k: usize,
    /// `[B, A_j − B, A_k − B, N − (A_j + A_k − B)]`.
    pub table: [u64; 4],
    pub odds_ratio: f64,
    pub p: f64,
    pub q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignComplex {
    pub complex_id: usize,
    pub member_clusters: Vec<usize>,
    /// Maps where at least one member is present.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexReport {
    /// Maps with at least one sign.
    pub n_maps: usize,
    pub tested_pairs: usize,
    /// Significant pairs only.
    pub edges: Vec<PairTest>,
    pub complexes: Vec<SignComplex>,
    /// Present clusters without any significant pair.
    pub isolated: Vec<usize>,
    pub modularity: f64,
}

struct Bitset(Vec<u64>);

impl Bitset {
    fn new(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn count(&self) -> u64 {
        self.0.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn and_count(&self, o: &Bitset) -> u64 {
        self.0.iter().zip(&o.0).map(|(a, b)| (a & b).count_ones() as u64).sum()
    }

    fn or_with(&mut self, o: &Bitset) {
        self.0.iter_mut().zip(&o.0).for_each(|(a, b)| *a |= b);
    }
}

/// Coadapted sign complexes: pairwise one-sided Fisher tests on the
/// presence matrix, an edge per significant pair, Louvain communities of
/// the resulting graph.
pub fn detect_complexes(corpus: &SignCorpus, params: &ComplexParams) -> ComplexReport {
    let per_map = corpus.map_counts();
    let rows: Vec<&BTreeMap<usize, u32>> = per_map.iter().filter(|m| !m.is_empty()).collect();
    let n = rows.len();
    let mut presence: Vec<Bitset> = (0..corpus.n_clusters).map(|_| Bitset::new(n)).collect();
    for (i, row) in rows.iter().enumerate() {
        for (&c, &cnt) in row.iter() {
            if cnt >= params.presence_min {
                presence[c].set(i);
            }
        }
    }
    let a: Vec<u64> = presence.iter().map(Bitset::count).collect();
    let present: Vec<usize> = (0..corpus.n_clusters).filter(|&c| a[c] > 0).collect();
    let mut lf = LnFactorials::new(n);
    let mut tests = Vec::new();
    for (x, &j) in present.iter().enumerate() {
        for &k in &present[x + 1..] {
            let b = presence[j].and_count(&presence[k]);
            let table = [b, a[j] - b, a[k] - b, n as u64 - (a[j] + a[k] - b)];
            tests.push(PairTest {
                j,
                k,
                table,
                odds_ratio: odds_ratio(table),
                p: fisher_exact_greater(table, &mut lf),
                q: None,
            });
        }
    }
    let tested_pairs = tests.len();
    if params.bh {
        let q = benjamini_hochberg(&tests.iter().map(|t| t.p).collect::<Vec<_>>());
        for (t, q) in tests.iter_mut().zip(q) {
            t.q = Some(q);
        }
    }
    let edges: Vec<PairTest> = tests
        .into_iter()
        .filter(|t| t.q.unwrap_or(t.p) < params.alpha)
        .collect();

    let mut nodes: Vec<usize> = edges.iter().flat_map(|e| [e.j, e.k]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let isolated = present.iter().copied().filter(|c| nodes.binary_search(c).is_err()).collect();
    let local = |c: usize| nodes.binary_search(&c).expect("edge node");
    let mut g = WeightedGraph::new(nodes.len());
    for e in &edges {
        g.add_edge(local(e.j), local(e.k), 1.0);
    }
    let comm = louvain(&g, params.seed);
    let complexes = comm
        .members()
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let member_clusters: Vec<usize> = members.iter().map(|&i| nodes[i]).collect();
            let mut any = Bitset::new(n);
            for &c in &member_clusters {
                any.or_with(&presence[c]);
            }
            SignComplex {
                complex_id: id,
                member_clusters,
                support: any.count() as usize,
            }
        })
        .collect();
    ComplexReport {
        n_maps: n,
        tested_pairs,
        edges,
        complexes,
        isolated,
        modularity: comm.modularity,
    }
}

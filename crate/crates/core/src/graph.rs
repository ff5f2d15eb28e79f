//! Weighted undirected graphs, Newman modularity and Louvain communities.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::stream_rng;

/// Undirected graph with nonnegative edge weights. A self-loop of weight
/// `w` contributes `2w` to its node's degree.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedGraph {
    adj: Vec<BTreeMap<usize, f64>>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![BTreeMap::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut g = Self::new(n);
        for &(a, b, w) in edges {
            g.add_edge(a, b, w);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Adds `w` to the weight of edge `{a, b}`.
    pub fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        assert!(a < self.len() && b < self.len(), "node out of range");
        *self.adj[a].entry(b).or_insert(0.0) += w;
        if a != b {
            *self.adj[b].entry(a).or_insert(0.0) += w;
        }
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.adj[a].get(&b).copied().unwrap_or(0.0)
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj[a].iter().map(|(&b, &w)| (b, w))
    }

    pub fn degree(&self, a: usize) -> f64 {
        self.adj[a]
            .iter()
            .map(|(&b, &w)| if b == a { 2.0 * w } else { w })
            .sum()
    }

    /// Total edge weight `m`.
    pub fn total_weight(&self) -> f64 {
        (0..self.len()).map(|a| self.degree(a)).sum::<f64>() / 2.0
    }

    /// Edges as `(a, b, w)` with `a <= b`, in node order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (a, nb) in self.adj.iter().enumerate() {
            for (&b, &w) in nb.range(a..) {
                out.push((a, b, w));
            }
        }
        out
    }
}

/// Newman modularity `Q = Σ_c [in_c/m − (tot_c/2m)²]` for a labelling of
/// every node. An edgeless graph has `Q = 0`.
pub fn modularity(g: &WeightedGraph, labels: &[usize]) -> f64 {
    assert_eq!(labels.len(), g.len(), "partition must cover all nodes");
    let m = g.total_weight();
    if m <= 0.0 {
        return 0.0;
    }
    let mut inner: BTreeMap<usize, f64> = BTreeMap::new();
    let mut tot: BTreeMap<usize, f64> = BTreeMap::new();
    for (a, b, w) in g.edges() {
        if labels[a] == labels[b] {
            *inner.entry(labels[a]).or_insert(0.0) += w;
        }
    }
    for a in 0..g.len() {
        *tot.entry(labels[a]).or_insert(0.0) += g.degree(a);
    }
    tot.iter()
        .map(|(c, &t)| inner.get(c).copied().unwrap_or(0.0) / m - (t / (2.0 * m)).powi(2))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Communities {
    /// Community of each node, numbered `0..k` by first appearance.
    pub labels: Vec<usize>,
    pub modularity: f64,
    pub levels: usize,
}

impl Communities {
    pub fn count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count()];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

fn relabel(labels: &mut [usize]) -> usize {
    let mut map = BTreeMap::new();
    for l in labels.iter_mut() {
        let next = map.len();
        *l = *map.entry(*l).or_insert(next);
    }
    map.len()
}

/// One local-moving pass over a (possibly aggregated) graph. Returns the
/// node→community map and whether anything moved.
fn local_moving(g: &WeightedGraph, seed: u64, level: u64) -> (Vec<usize>, bool) {
    let n = g.len();
    let m2 = 2.0 * g.total_weight();
    let k: Vec<f64> = (0..n).map(|i| g.degree(i)).collect();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = k.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, level));
    let mut moved_any = false;
    let mut links: BTreeMap<usize, f64> = BTreeMap::new();
    loop {
        let mut moved = false;
        for &i in &order {
            let ci = comm[i];
            links.clear();
            for (j, w) in g.neighbors(i) {
                if j != i {
                    *links.entry(comm[j]).or_insert(0.0) += w;
                }
            }
            tot[ci] -= k[i];
            let gain = |c: usize, w_in: f64| w_in - tot[c] * k[i] / m2;
            let mut best = ci;
            let mut best_gain = gain(ci, links.get(&ci).copied().unwrap_or(0.0));
            for (&c, &w_in) in &links {
                let g_c = gain(c, w_in);
                if g_c > best_gain + 1e-12 {
                    best = c;
                    best_gain = g_c;
                }
            }
            tot[best] += k[i];
            if best != ci {
                comm[i] = best;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            break;
        }
    }
    (comm, moved_any)
}

fn aggregate(g: &WeightedGraph, comm: &[usize], k: usize) -> WeightedGraph {
    let mut out = WeightedGraph::new(k);
    for (a, b, w) in g.edges() {
        out.add_edge(comm[a], comm[b], w);
    }
    out
}

/// Louvain community detection. The node visiting order at each level is a
/// seeded shuffle, so results are reproducible for a given `seed`.
pub fn louvain(g: &WeightedGraph, seed: u64) -> Communities {
    let n = g.len();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut current = g.clone();
    let mut levels = 0;
    if g.total_weight() > 0.0 {
        loop {
            let (mut comm, moved) = local_moving(&current, seed, levels as u64);
            if !moved {
                break;
            }
            let k = relabel(&mut comm);
            for l in labels.iter_mut() {
                *l = comm[*l];
            }
            levels += 1;
            current = aggregate(&current, &comm, k);
        }
    }
    relabel(&mut labels);
    let q = modularity(g, &labels);
    Communities {
        labels,
        modularity: q,
        levels,
    }
}

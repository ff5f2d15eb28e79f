use serde::{Deserialize, Serialize};

use super::ClusteringError;
use crate::vectors::{sq_dist, Vectors};

/// One agglomeration step. Leaves are `0..n`; the node created by merge
/// `i` has id `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Leaves under a node.
    pub fn members(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < self.n_leaves {
                out.push(x);
            } else {
                let m = &self.merges[x - self.n_leaves];
                stack.push(m.a);
                stack.push(m.b);
            }
        }
        out.sort_unstable();
        out
    }

    /// Flat labels obtained by undoing the last `k − 1` merges. Labels are
    /// numbered by smallest member leaf.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        let n = self.n_leaves;
        let k = k.clamp(1, n);
        let applied = n - k;
        let mut parent: Vec<usize> = (0..n + applied).collect();
        for (i, m) in self.merges.iter().take(applied).enumerate() {
            parent[m.a] = n + i;
            parent[m.b] = n + i;
        }
        let root = |mut x: usize| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        };
        let roots: Vec<usize> = (0..n).map(root).collect();
        let mut order: Vec<usize> = Vec::new();
        for &r in &roots {
            if !order.contains(&r) {
                order.push(r);
            }
        }
        roots.iter().map(|r| order.iter().position(|o| o == r).unwrap()).collect()
    }
}

/// Ward agglomeration with the Lance–Williams update on squared Euclidean
/// distances. Heights are the Ward distances (the Euclidean distance for
/// two singletons). Ties go to the pair with the smallest node ids.
pub fn ward_tree(points: &Vectors) -> Result<Dendrogram, ClusteringError> {
    let n = points.len();
    if n < 2 {
        return Err(ClusteringError::InvalidParam("ward_tree needs at least two points".into()));
    }
    let total = 2 * n - 1;
    let mut d2 = vec![f64::INFINITY; total * total];
    for i in 0..n {
        for j in i + 1..n {
            let d = sq_dist(points.row(i), points.row(j));
            d2[i * total + j] = d;
            d2[j * total + i] = d;
        }
    }
    let mut size = vec![0usize; total];
    size[..n].iter_mut().for_each(|s| *s = 1);
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let d = d2[a * total + b];
                if d < best.2 {
                    best = (a, b, d);
                }
            }
        }
        let (a, b, dab) = best;
        let u = n + step;
        let (na, nb) = (size[a] as f64, size[b] as f64);
        active.retain(|&x| x != a && x != b);
        for &v in &active {
            let nv = size[v] as f64;
            let t = na + nb + nv;
            let d = ((nv + na) * d2[v * total + a] + (nv + nb) * d2[v * total + b] - nv * dab) / t;
            d2[v * total + u] = d;
            d2[u * total + v] = d;
        }
        size[u] = size[a] + size[b];
        // active stays sorted: new ids exceed every existing id
        active.push(u);
        merges.push(Merge {
            a,
            b,
            height: dab.max(0.0).sqrt(),
            size: size[u],
        });
    }
    Ok(Dendrogram { n_leaves: n, merges })
}

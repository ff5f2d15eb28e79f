use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{NetStatsError, Result};
use crate::vectors::{cosine_distance, Vectors};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NameParams {
    /// Maximum cosine distance for two variants to be linked.
    pub threshold: f64,
    /// Only a node's nearest neighbours are candidate links.
    pub knn: usize,
}

impl Default for NameParams {
    fn default() -> Self {
        Self { threshold: 0.17, knn: 3 }
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Collapses spelling variants of names. Each name is linked to those of
/// its `knn` nearest neighbours (cosine distance, ties by index) within
/// `threshold`; every connected component maps to its most mentioned
/// member, ties broken lexicographically. Returns `variant → canonical`
/// for every input name.
pub fn normalize_names(
    names: &[String],
    embeddings: &Vectors,
    mentions: &[u64],
    params: &NameParams,
) -> Result<BTreeMap<String, String>> {
    let n = names.len();
    if embeddings.len() != n || mentions.len() != n {
        return Err(NetStatsError::DimensionMismatch {
            expected: n,
            got: embeddings.len().min(mentions.len()),
        });
    }
    if !(params.threshold > 0.0 && params.threshold < 2.0) {
        return Err(NetStatsError::InvalidParam("threshold must lie in (0, 2)".into()));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (cosine_distance(embeddings.row(i), embeddings.row(j)), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(dist, j) in d.iter().take(params.knn) {
            if dist <= params.threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let e = best.entry(r).or_insert(i);
        let better = mentions[i] > mentions[*e] || (mentions[i] == mentions[*e] && names[i] < names[*e]);
        if better {
            *e = i;
        }
    }
    Ok((0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            (names[i].clone(), names[best[&r]].clone())
        })
        .collect())
}

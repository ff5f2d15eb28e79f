use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{modularity, WeightedGraph};
use crate::model::MapRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatorNode {
    pub name: String,
    pub publications: usize,
    pub mean_year: f64,
    pub main_city: Option<String>,
    pub main_country: Option<String>,
}

/// Co-publication graph; edge weights count shared maps.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    /// Sorted by name; node `i` of the graph is `nodes[i]`.
    pub nodes: Vec<CreatorNode>,
    pub graph: WeightedGraph,
}

impl SocialGraph {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.name.as_str().cmp(name)).ok()
    }
}

fn most_common(values: &[String]) -> Option<String> {
    let mut c: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *c.entry(v).or_insert(0) += 1;
    }
    // first maximum in lexicographic order
    c.into_iter()
        .fold(None, |best: Option<(&str, usize)>, (k, n)| match best {
            Some((_, m)) if m >= n => best,
            _ => Some((k, n)),
        })
        .map(|(k, _)| k.to_string())
}

/// One node per creator, one edge per pair of creators sharing a map.
pub fn build_social_graph(records: &[MapRecord]) -> SocialGraph {
    #[derive(Default)]
    struct Acc {
        years: Vec<f64>,
        cities: Vec<String>,
        countries: Vec<String>,
    }
    let mut acc: BTreeMap<String, Acc> = BTreeMap::new();
    for r in records {
        let creators: BTreeSet<&String> = r.creators.iter().collect();
        for c in creators {
            let a = acc.entry(c.clone()).or_default();
            a.years.push(r.year as f64);
            a.cities.extend(r.pub_city.clone());
            a.countries.extend(r.pub_country.clone());
        }
    }
    let nodes: Vec<CreatorNode> = acc
        .into_iter()
        .map(|(name, a)| CreatorNode {
            name,
            publications: a.years.len(),
            mean_year: a.years.iter().sum::<f64>() / a.years.len() as f64,
            main_city: most_common(&a.cities),
            main_country: most_common(&a.countries),
        })
        .collect();
    let mut sg = SocialGraph {
        graph: WeightedGraph::new(nodes.len()),
        nodes,
    };
    for r in records {
        let ids: Vec<usize> = r
            .creators
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter_map(|c| sg.index_of(c))
            .collect();
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                sg.graph.add_edge(a, b, 1.0);
            }
        }
    }
    sg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// `(bin width, Q)` per width.
    pub curve: Vec<(f64, f64)>,
    /// Width with the highest Q (first on ties).
    pub best_width: f64,
}

/// Modularity of the partition of nodes into fixed year bins
/// `floor((year − min year) / width)`, for each width.
pub fn temporal_modularity_sweep(graph: &WeightedGraph, node_years: &[f64], widths: &[f64]) -> Sweep {
    assert_eq!(node_years.len(), graph.len(), "one year per node");
    let y0 = node_years.iter().copied().fold(f64::INFINITY, f64::min);
    let curve: Vec<(f64, f64)> = widths
        .iter()
        .map(|&w| {
            let labels: Vec<usize> = node_years.iter().map(|&y| ((y - y0) / w).floor() as usize).collect();
            (w, modularity(graph, &labels))
        })
        .collect();
    let best_width = curve
        .iter()
        .fold(None, |b: Option<(f64, f64)>, &(w, q)| match b {
            Some((_, bq)) if bq >= q => b,
            _ => Some((w, q)),
        })
        .map_or(f64::NAN, |b| b.0);
    Sweep { curve, best_width }
}

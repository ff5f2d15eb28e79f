use serde::{Deserialize, Serialize};

use super::quadrants::QuadrantProfile;
use super::{CompositionError, Result};
use crate::model::{SemanticClass, N_CLASSES};
use crate::stats::{mean, pearson, pearson_p_value, sample_variance, student_t_sf};

/// Edges of the complete graph on the nine quadrants.
pub const N_EDGES: usize = 36;

/// Quadrant pairs, 1-based, row-major numbering.
pub type EdgeSet = Vec<(u8, u8)>;

/// Position of edge `{i, j}` (1-based quadrants) in the 36-edge order
/// (1,2), (1,3), …, (8,9).
pub fn edge_index(i: u8, j: u8) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    assert!(a >= 1 && b <= 9 && a != b, "bad quadrant edge ({i}, {j})");
    let (a, b) = (a as usize - 1, b as usize - 1);
    // edges before row a: Σ_{k<a} (8 − k)
    a * (17 - a) / 2 + (b - a - 1)
}

fn all_edges() -> Vec<(u8, u8)> {
    let mut v = Vec::with_capacity(N_EDGES);
    for i in 1..=9u8 {
        for j in i + 1..=9 {
            v.push((i, j));
        }
    }
    v
}

/// Pearson matrix between semantic classes; `None` where a class has zero
/// variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrMatrix {
    pub r: Vec<Vec<Option<f64>>>,
    pub p: Vec<Vec<Option<f64>>>,
    pub n: usize,
}

/// Class co-location: correlation of class shares across all quadrants of
/// all maps.
pub fn colocation_matrix(profiles: &[QuadrantProfile]) -> Result<CorrMatrix> {
    let n = profiles.len() * 9;
    if n < 3 {
        return Err(CompositionError::TooFewSamples { needed: 3, got: n });
    }
    let cols: Vec<Vec<f64>> = (0..N_CLASSES)
        .map(|c| profiles.iter().flat_map(|p| p.ratios.iter().map(move |q| q[c])).collect())
        .collect();
    let mut r = vec![vec![None; N_CLASSES]; N_CLASSES];
    let mut pv = vec![vec![None; N_CLASSES]; N_CLASSES];
    for a in 0..N_CLASSES {
        for b in a..N_CLASSES {
            let v = if a == b {
                pearson(&cols[a], &cols[b]).map(|_| 1.0)
            } else {
                pearson(&cols[a], &cols[b])
            };
            r[a][b] = v;
            r[b][a] = v;
            let p = v.map(|x| if a == b { 0.0 } else { pearson_p_value(x, n) });
            pv[a][b] = p;
            pv[b][a] = p;
        }
    }
    Ok(CorrMatrix { r, p: pv, n })
}

/// Correlations between quadrants across maps: per class, and for the
/// total non-background share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantGraph {
    pub n_maps: usize,
    pub total: Vec<Option<f64>>,
    /// `per_class[class][edge]`.
    pub per_class: Vec<Vec<Option<f64>>>,
}

impl QuadrantGraph {
    pub fn weight(&self, class: Option<SemanticClass>, i: u8, j: u8) -> Option<f64> {
        let e = edge_index(i, j);
        match class {
            Some(c) => self.per_class[c.index()][e],
            None => self.total[e],
        }
    }
}

pub fn quadrant_graph(profiles: &[QuadrantProfile]) -> Result<QuadrantGraph> {
    if profiles.len() < 3 {
        return Err(CompositionError::TooFewSamples {
            needed: 3,
            got: profiles.len(),
        });
    }
    let series = |q: usize, c: Option<usize>| -> Vec<f64> {
        profiles
            .iter()
            .map(|p| match c {
                Some(c) => p.ratios[q][c],
                None => 1.0 - p.ratios[q][SemanticClass::Background.index()],
            })
            .collect()
    };
    let edges = all_edges();
    let corr = |c: Option<usize>| -> Vec<Option<f64>> {
        let s: Vec<Vec<f64>> = (0..9).map(|q| series(q, c)).collect();
        edges
            .iter()
            .map(|&(i, j)| pearson(&s[i as usize - 1], &s[j as usize - 1]))
            .collect()
    };
    Ok(QuadrantGraph {
        n_maps: profiles.len(),
        total: corr(None),
        per_class: (0..N_CLASSES).map(|c| corr(Some(c))).collect(),
    })
}

/// A one-sided comparison "edges `a` are stronger than edges `b`".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypothesis {
    pub name: String,
    pub a: EdgeSet,
    pub b: EdgeSet,
    /// Paired test on `a[i]` vs `b[i]`; otherwise unpaired.
    pub paired: bool,
    /// Classes whose edge weights are pooled; empty means every
    /// non-background class.
    #[serde(default)]
    pub classes: Vec<SemanticClass>,
}

fn rc(q: u8) -> (i32, i32) {
    (((q - 1) / 3) as i32, ((q - 1) % 3) as i32)
}

fn q_of(r: i32, c: i32) -> u8 {
    (r * 3 + c + 1) as u8
}

fn map_edge(e: (u8, u8), f: impl Fn(i32, i32) -> (i32, i32)) -> (u8, u8) {
    let (a, b) = (rc(e.0), rc(e.1));
    let (x, y) = (f(a.0, a.1), f(b.0, b.1));
    let (i, j) = (q_of(x.0, x.1), q_of(y.0, y.1));
    (i.min(j), i.max(j))
}

fn select_paired(keep: impl Fn((i32, i32), (i32, i32)) -> bool, f: impl Fn(i32, i32) -> (i32, i32) + Copy) -> (EdgeSet, EdgeSet) {
    let a: EdgeSet = all_edges().into_iter().filter(|&(i, j)| keep(rc(i), rc(j))).collect();
    let b = a.iter().map(|&e| map_edge(e, f)).collect();
    (a, b)
}

/// The eight standard composition hypotheses.
pub fn standard_hypotheses() -> Vec<Hypothesis> {
    let outer: EdgeSet = vec![(1, 2), (2, 3), (1, 4), (3, 6), (4, 7), (6, 9), (7, 8), (8, 9)];
    let mut circumjacent = outer.clone();
    circumjacent.extend([(2, 4), (2, 6), (4, 8), (6, 8)]);
    let radial = vec![(1, 5), (3, 5), (5, 7), (5, 9)];
    let cross = vec![(2, 5), (4, 5), (5, 6), (5, 8)];
    let h = |name: &str, a: EdgeSet, b: EdgeSet, paired: bool, classes: Vec<SemanticClass>| Hypothesis {
        name: name.to_string(),
        a,
        b,
        paired,
        classes,
    };
    let vflip = |r: i32, c: i32| (2 - r, c);
    let hflip = |r: i32, c: i32| (r, 2 - c);
    let (bottom, top_of_bottom) = select_paired(|a, b| a.0 + b.0 > 2, vflip);
    let (top, bottom_of_top) = select_paired(|a, b| a.0 + b.0 < 2, vflip);
    let (right, left) = select_paired(|a, b| a.1 + b.1 > 2, hflip);
    let (horiz, vert) = select_paired(|a, b| (a.1 - b.1).abs() > (a.0 - b.0).abs(), |r, c| (c, r));
    vec![
        h("circumjacent_gt_radial", circumjacent, radial, false, vec![]),
        h(
            "long_range_horizontal_gt_vertical",
            vec![(1, 3), (4, 6), (7, 9)],
            vec![(1, 7), (2, 8), (3, 9)],
            true,
            vec![],
        ),
        h("central_cross_gt_outer_square", cross, outer, false, vec![]),
        h(
            "central_cross_horizontal_gt_vertical",
            vec![(4, 5), (5, 6)],
            vec![(2, 5), (5, 8)],
            true,
            vec![],
        ),
        h("bottom_gt_top_water", bottom, top_of_bottom, true, vec![SemanticClass::Water]),
        h("horizontal_gt_vertical", horiz, vert, true, vec![]),
        h("right_gt_left", right, left, true, vec![]),
        h("top_gt_bottom", top, bottom_of_top, true, vec![]),
    ]
}

impl Hypothesis {
    pub fn named(name: &str) -> Result<Self> {
        standard_hypotheses()
            .into_iter()
            .find(|h| h.name == name)
            .ok_or_else(|| CompositionError::UnknownHypothesis(name.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub hypothesis: String,
    pub paired: bool,
    pub n: usize,
    pub statistic: f64,
    /// `|mean(a) − mean(b)|` of the correlation values.
    pub delta_r: f64,
    /// One-sided p for `a > b`; 1 when the test is degenerate.
    pub p: f64,
}

/// Student t test of a hypothesis on quadrant-graph edge weights. Edges
/// whose correlation is undefined are dropped (pairwise in paired mode).
pub fn relationship_tests(graph: &QuadrantGraph, hyp: &Hypothesis) -> Result<TestReport> {
    if hyp.paired && hyp.a.len() != hyp.b.len() {
        return Err(CompositionError::InvalidParam(format!("{}: paired sets differ in length", hyp.name)));
    }
    let classes: Vec<SemanticClass> = if hyp.classes.is_empty() {
        SemanticClass::ALL[1..].to_vec()
    } else {
        hyp.classes.clone()
    };
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    for &c in &classes {
        if hyp.paired {
            for (&ea, &eb) in hyp.a.iter().zip(&hyp.b) {
                if let (Some(u), Some(v)) = (graph.weight(Some(c), ea.0, ea.1), graph.weight(Some(c), eb.0, eb.1)) {
                    xa.push(u);
                    xb.push(v);
                }
            }
        } else {
            xa.extend(hyp.a.iter().filter_map(|e| graph.weight(Some(c), e.0, e.1)));
            xb.extend(hyp.b.iter().filter_map(|e| graph.weight(Some(c), e.0, e.1)));
        }
    }
    // centre on one sample so that equal weights give exact zeros
    let shift = xa.first().copied().unwrap_or(0.0);
    xa.iter_mut().chain(xb.iter_mut()).for_each(|x| *x -= shift);
    let delta_r = (mean(&xa) - mean(&xb)).abs();
    let (statistic, df, n) = if hyp.paired {
        let d: Vec<f64> = xa.iter().zip(&xb).map(|(a, b)| a - b).collect();
        if d.len() < 2 {
            return Err(CompositionError::TooFewSamples { needed: 2, got: d.len() });
        }
        let se = (sample_variance(&d) / d.len() as f64).sqrt();
        (t_ratio(mean(&d), se), (d.len() - 1) as f64, d.len())
    } else {
        let (na, nb) = (xa.len(), xb.len());
        if na < 2 || nb < 2 {
            return Err(CompositionError::TooFewSamples { needed: 2, got: na.min(nb) });
        }
        let ss = sample_variance(&xa) * (na - 1) as f64 + sample_variance(&xb) * (nb - 1) as f64;
        let df = (na + nb - 2) as f64;
        let se = (ss / df * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
        (t_ratio(mean(&xa) - mean(&xb), se), df, na + nb)
    };
    let p = if statistic.is_nan() { 1.0 } else { student_t_sf(statistic, df) };
    Ok(TestReport {
        hypothesis: hyp.name.clone(),
        paired: hyp.paired,
        n,
        statistic,
        delta_r,
        p,
    })
}

/// `diff / se`, infinite for a nonzero difference with no spread and NaN
/// for a zero difference with no spread.
fn t_ratio(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        f64::NAN
    } else {
        diff.signum() * f64::INFINITY
    }
}

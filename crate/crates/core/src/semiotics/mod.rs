//! Cultural-evolution statistics over clustered signs.
//!
//! A [`SignCorpus`] lists every sign instance (mapel) with its map, cluster
//! and optional semantic compositional mode. Map-level covariates (year,
//! scale, publication place) are passed alongside as per-map slices so the
//! same corpus can be stratified in several ways.

mod complexes;
mod evolution;
mod geography;
mod strata;
mod univocity;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image_ops::{Mapel, SemanticMode};

pub use complexes::{
    benjamini_hochberg, detect_complexes, fisher_exact_greater, odds_ratio, ComplexParams, ComplexReport,
    LnFactorials, PairTest, SignComplex,
};
pub use evolution::{complexity_series, diversity_series, DiversityPoint};
pub use geography::{diachronic_flow, geographic_rupture_matrix, DiachronicFlow, FlowEdge, FlowNode, RuptureMatrix};
pub use strata::{
    build_category_table, build_strata_table, characteristicity, normalize_column, rupture, rupture_curve,
    rupture_semantic, top_characteristic, CurvePoint, ModeFilter, RuptureCurveParams, SemanticRupture, StrataTable,
};
pub use univocity::{univocity, univocity_bootstrap, univocity_per_map, SemanticSymbolicCounts, UnivocityEstimate};

/// Semantic modes used by the semiotic statistics: modes 1–7. The
/// boundary/contours mode is excluded.
pub const N_MODES: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemioticsError {
    #[error("stratum {0} is empty")]
    EmptyStratum(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no semantic mode carries mass on either side")]
    NoActiveMode,
    #[error("not enough data for window position {0}")]
    InsufficientData(usize),
    #[error("year {0} has signs but no maps")]
    ZeroMaps(i32),
    #[error("empty map subset")]
    EmptySubset,
    #[error("need at least two groups, got {0}")]
    TooFewGroups(usize),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

pub type Result<T> = std::result::Result<T, SemioticsError>;

/// Slot `0..7` of a mode in per-mode arrays; `None` for the excluded mode.
pub fn mode_slot(mode: SemanticMode) -> Option<usize> {
    let k = mode.number() as usize;
    (k <= N_MODES).then(|| k - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sign {
    /// Index into [`SignCorpus::map_ids`].
    pub map: usize,
    pub cluster: usize,
    pub mode: Option<SemanticMode>,
}

/// Clustered sign instances of a corpus.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignCorpus {
    pub n_clusters: usize,
    pub map_ids: Vec<String>,
    pub signs: Vec<Sign>,
}

impl SignCorpus {
    /// Builds a corpus over `map_ids` (in that order) from clustered mapels.
    /// Mapels without a cluster or whose map is not listed are skipped.
    pub fn from_mapels(map_ids: Vec<String>, mapels: &[Mapel], n_clusters: usize) -> Self {
        let index: BTreeMap<&str, usize> = map_ids.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
        let signs = mapels
            .iter()
            .filter_map(|m| {
                let map = *index.get(m.map_id.as_str())?;
                let cluster = m.cluster_id? as usize;
                (cluster < n_clusters).then_some(Sign {
                    map,
                    cluster,
                    mode: m.semantic_mode,
                })
            })
            .collect();
        Self {
            n_clusters,
            map_ids,
            signs,
        }
    }

    pub fn n_maps(&self) -> usize {
        self.map_ids.len()
    }

    /// Per-map cluster counts.
    pub fn map_counts(&self) -> Vec<BTreeMap<usize, u32>> {
        let mut out = vec![BTreeMap::new(); self.n_maps()];
        for s in &self.signs {
            *out[s.map].entry(s.cluster).or_insert(0) += 1;
        }
        out
    }
}

//! Networks of map creators and the community stylometry test.

mod names;
mod salient;
mod social;
mod stylometry;

use thiserror::Error;

pub use crate::graph::{louvain, modularity, Communities, WeightedGraph};
pub use names::{normalize_names, NameParams};
pub use salient::{salient_similarity, DomainPointerSet, Polarity, SalientScores};
pub use social::{build_social_graph, temporal_modularity_sweep, CreatorNode, SocialGraph, Sweep};
pub use stylometry::{community_distance_test, map_distance, BatchParams, MapIcons, RhoB};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetStatsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("a batch needs maps from at least two communities")]
    SingletonBatch,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

pub type Result<T> = std::result::Result<T, NetStatsError>;

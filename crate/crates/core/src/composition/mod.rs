//! Map composition: the nine-quadrant framework, co-location and spatial
//! relationship tests, composition features, semantic types and the
//! road-width regression.

mod features;
mod quadrants;
mod relations;
mod roads;

use thiserror::Error;

use crate::clustering::ClusteringError;

pub use features::{composition_features, semantic_types, SemanticTypes, TypeParams, PHI_LEN};
pub use quadrants::{content_box, quadrant_ratios, shape_ratio, ContentBox, QuadrantProfile, CONTENT_THRESHOLD};
pub use relations::{
    colocation_matrix, edge_index, quadrant_graph, relationship_tests, standard_hypotheses, CorrMatrix, EdgeSet,
    Hypothesis, QuadrantGraph, TestReport, N_EDGES,
};
pub use roads::{roadwidth_regression, RegressionDirection, RoadWidthParams, RoadWidthReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositionError {
    #[error("mask has no content")]
    NoContent,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("unknown hypothesis `{0}`")]
    UnknownHypothesis(String),
    #[error("degenerate variance in {0}")]
    DegenerateVariance(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
}

pub type Result<T> = std::result::Result<T, CompositionError>;

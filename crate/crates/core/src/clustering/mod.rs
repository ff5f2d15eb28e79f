//! Vector-space clustering: mini-batch k-means, density-aware mixtures,
//! exemplars, Ward trees, 2-D/3-D layouts and cluster quality measures.

mod kmeans;
mod layout;
mod mixture;
mod quality;
mod spectral;
mod ward;

use thiserror::Error;

pub use kmeans::{minibatch_kmeans, nearest_center, KMeansParams, KMeansResult};
pub use layout::{grid_displacement, grid_snap, pca_layout, PcaLayout};
pub use mixture::{assign_gmm, density_recluster, pooled_variance, select_exemplars, ClusterModel, Exemplars};
pub use quality::{knn_classify, silhouette};
pub use spectral::spectral_embedding;
pub use ward::{ward_tree, Dendrogram, Merge};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusteringError {
    #[error("k = {k} exceeds the {n} available samples")]
    KTooLarge { k: usize, n: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("grid of {cells} cells cannot hold {n} items")]
    GridTooSmall { cells: usize, n: usize },
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

//! Batch analysis toolkit for digitized map corpora.
//!
//! The crate turns map images, semantic label masks, externally computed
//! embeddings and catalog metadata into quantitative measures of
//! cartographic figuration:
//!
//! * [`model`] – domain records and file ingestion (metadata, masks, `EMB1`
//!   embedding files, detections).
//! * [`image_ops`] – pixel primitives and the map-element ("mapel")
//!   extraction pipeline with its interpretable feature set.
//! * [`clustering`] – mini-batch k-means, density-aware reclustering,
//!   exemplars, Ward phylogeny, layouts, silhouette and kNN propagation.
//! * [`semiotics`] – strata tables, characteristicity, rupture, diversity,
//!   coadapted sign complexes, univocity and diachronic flow.
//! * [`composition`] – quadrant framework, co-location and spatial
//!   relationship tests, composition features and road-width regression.
//! * [`net_stats`] – name normalization, social graphs, modularity,
//!   salient similarity and the community stylometry test.
//! * [`chrono_stats`] – smoothing, lagged dependency, trend tests,
//!   KS statistics, attention rasters and dyadic regressions.
//!
//! Interchangeable algorithms (clustering back-ends, layouts) are exposed as
//! trait objects in [`registry`] and selected by name at runtime.

pub mod chrono_stats;
pub mod clustering;
pub mod composition;
pub mod graph;
pub mod image_ops;
pub mod model;
pub mod net_stats;
pub mod registry;
pub mod rng;
pub mod semiotics;
pub mod stats;
pub mod synth;
pub mod vectors;

pub use vectors::Vectors;

//! Domain records and file ingestion.
//!
//! Loaders are pure functions of their input path. A [`Dataset`] is built
//! once and then shared read-only.

mod dataset;
mod embeddings;
mod error;
mod mask;
mod metadata;
mod detections;

pub use dataset::{Dataset, DanglingRef, StrataVar, StratumKey};
pub use detections::{load_detections, Detection, DetectionSet};
pub use embeddings::{
    encode_embeddings, load_embeddings, read_embeddings, write_embeddings, EmbeddingTable, EMB_MAGIC,
};
pub use error::IngestError;
pub use mask::{load_mask, shares, write_mask, SemanticClass, SemanticMask, N_CLASSES};
pub use metadata::{
    load_coverage, load_metadata, CoverageGeom, MapRecord, MetadataReport, METADATA_COLUMNS,
};

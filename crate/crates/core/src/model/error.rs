use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: bad year `{value}`")]
    BadYear { row: usize, value: String },
    #[error("row {row}: bad coordinates lat={lat} lon={lon}")]
    BadLatLon { row: usize, lat: String, lon: String },
    #[error("row {row}: bad value `{value}` in column `{column}`")]
    BadField {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: duplicate map_id `{map_id}`")]
    DuplicateMapId { row: usize, map_id: String },
    #[error("row {row}: unknown map_id `{map_id}`")]
    UnknownMap { row: usize, map_id: String },
    #[error("label value {value} at ({x}, {y}) outside 0..=5")]
    BadLabelValue { value: u8, x: u32, y: u32 },
    #[error("mask is not a single-channel 8-bit image")]
    NotGrayscale,
    #[error("image decode error: {0}")]
    Image(String),
    #[error("bad magic, expected EMB1")]
    BadMagic,
    #[error("count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("non-finite value at payload index {index}")]
    NonFiniteValue { index: usize },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("invalid id `{0}`")]
    InvalidId(String),
    #[error("row {row}: score {score} outside [0, 1]")]
    ScoreOutOfRange { row: usize, score: f64 },
    #[error("row {row}: negative box extent")]
    NegativeExtent { row: usize },
    #[error("row {row}: box outside image bounds {width}x{height}")]
    OutOfBounds { row: usize, width: u32, height: u32 },
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, e: impl std::fmt::Display) -> Self {
        IngestError::Csv {
            path: path.into(),
            message: e.to_string(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

use cartolab::chrono_stats::ChronoError;
use cartolab::clustering::ClusteringError;
use cartolab::composition::CompositionError;
use cartolab::image_ops::ImageOpsError;
use cartolab::model::IngestError;
use cartolab::net_stats::NetStatsError;
use cartolab::semiotics::SemioticsError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad configuration value: {0}")]
    BadValue(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported configuration format `{0}` (use .toml or .json)")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("unknown analysis `{0}`")]
    UnknownAnalysis(String),
    #[error("missing input {what}; run `{step}` first")]
    MissingInput { what: String, step: &'static str },
    #[error("mosaic grid {rows}x{cols} is smaller than the {clusters} clusters")]
    GridTooSmall { rows: usize, cols: usize, clusters: usize },
    #[error("png encoding: {0}")]
    Png(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    ImageOps(#[from] ImageOpsError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    Semiotics(#[from] SemioticsError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error(transparent)]
    NetStats(#[from] NetStatsError),
    #[error(transparent)]
    Chrono(#[from] ChronoError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

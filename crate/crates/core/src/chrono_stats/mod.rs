//! Time-series statistics, distribution distances, attention rasters and
//! dyadic regressions.

mod attention;
mod domestic;
mod dyadic;
mod ks;
mod lag;
mod smoothing;
mod trend;

use thiserror::Error;

pub use attention::{attention_raster, AttentionRaster, GridSpec};
pub use domestic::{domestic_share_series, wilson_interval, DomesticSeries};
pub use dyadic::{dyadic_regression, min_max_normalize, rank_transform, Coefficient, DyadicDesign, DyadicOptions, DyadicReport};
pub use ks::{ks_cumsum, ks_statistic};
pub use lag::{lag_peaks, lagged_correlation, LagPoint};
pub use smoothing::{gaussian_kernel, gaussian_smooth, gaussian_smooth_masked};
pub use trend::{mann_kendall, MannKendall};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChronoError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("overlap at offset {0} is below 10 points")]
    InsufficientOverlap(i64),
    #[error("series too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("all values are tied")]
    AllTies,
    #[error("empty sample")]
    EmptySample,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("design matrix is rank deficient (rank {rank} of {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },
}

pub type Result<T> = std::result::Result<T, ChronoError>;

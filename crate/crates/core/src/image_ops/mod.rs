//! Pixel primitives and the mapel extraction pipeline.
//!
//! Extraction runs: bilateral smoothing → background masking → graphic
//! load (edge density per cell) → maxima sampling → per-mapel orientation,
//! inverse rotation, cropping and feature computation.

mod edges;
mod extract;
mod features;
mod filter;
mod orientation;
mod sampling;

use thiserror::Error;

pub use edges::{canny, edge_density_grid, graphic_load, EdgeMap, LoadGrid, CANNY_HIGH, CANNY_LOW};
pub use extract::{
    extract_from_image, extract_mapels, mapel_feature_table, neutralized_patch, read_mapel_sidecar, write_mapel_sidecar, Mapel,
    MapelParams, MapelSize, SemanticMode,
};
pub use features::{
    connected_components, cv_features, foreground_weighted_color, lbp_histogram, line_width,
    otsu_threshold, FeatureVector, LBP_BINS, LBP_FLAT_BIN,
};
pub use filter::{bilateral_smooth, bilateral_smooth_gray, luminance, rotate_crop, Plane};
pub use orientation::{principal_orientation, Orientation, HOG_BINS};
pub use sampling::{local_maxima, sample_mapel_positions, BackgroundMask, SamplingParams};

#[derive(Debug, Error, PartialEq)]
pub enum ImageOpsError {
    #[error("cell size {cell}px exceeds image {width}x{height}")]
    CellLargerThanImage { cell: u32, width: u32, height: u32 },
    #[error("cell size {0}px is below the 8px minimum")]
    CellTooSmall(u32),
    #[error("image has no foreground outside the background mask")]
    NoForeground,
    #[error("weight map sums to zero")]
    AllZeroWeights,
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (u32, u32),
        got: (u32, u32),
    },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("i/o: {0}")]
    Io(String),
}

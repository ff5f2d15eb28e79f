use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::edges::LoadGrid;
use super::ImageOpsError;
use crate::model::{SemanticClass, SemanticMask};
use crate::rng::rng_from;

/// Pixel-level background mask with an integral image for window queries.
#[derive(Debug, Clone)]
pub struct BackgroundMask {
    width: u32,
    height: u32,
    /// `(width + 1) × (height + 1)` summed-area table of background pixels.
    integral: Vec<u32>,
}

impl BackgroundMask {
    pub fn from_fn(width: u32, height: u32, is_background: impl Fn(u32, u32) -> bool) -> Self {
        let (w, h) = (width as usize, height as usize);
        let mut integral = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += is_background(x as u32, y as u32) as u32;
                integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
            }
        }
        Self {
            width,
            height,
            integral,
        }
    }

    /// Nothing is background.
    pub fn empty(width: u32, height: u32) -> Self {
        Self::from_fn(width, height, |_, _| false)
    }

    /// Background class pixels of a semantic mask, resampled (nearest) to
    /// `width × height` when the sizes differ.
    pub fn from_semantic(mask: &SemanticMask, width: u32, height: u32) -> Self {
        let (mw, mh) = (mask.width() as u64, mask.height() as u64);
        Self::from_fn(width, height, |x, y| {
            let mx = (x as u64 * mw / width as u64) as u32;
            let my = (y as u64 * mh / height as u64) as u32;
            mask.get(mx, my) == SemanticClass::Background as u8
        })
    }

    /// Cells whose load is below `threshold` are blank.
    pub fn from_blank_cells(grid: &LoadGrid, threshold: f64, width: u32, height: u32) -> Self {
        let c = grid.cell_px;
        Self::from_fn(width, height, |x, y| {
            grid.get((y / c) as usize, (x / c) as usize) < threshold
        })
    }

    /// Pixelwise union.
    pub fn union(&self, other: &BackgroundMask) -> Self {
        assert_eq!((self.width, self.height), (other.width, other.height));
        Self::from_fn(self.width, self.height, |x, y| {
            self.is_background(x, y) || other.is_background(x, y)
        })
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    fn count_in(&self, x0: i64, y0: i64, x1: i64, y1: i64) -> u32 {
        let w1 = self.width as usize + 1;
        let xa = x0.clamp(0, self.width as i64) as usize;
        let xb = x1.clamp(0, self.width as i64) as usize;
        let ya = y0.clamp(0, self.height as i64) as usize;
        let yb = y1.clamp(0, self.height as i64) as usize;
        if xa >= xb || ya >= yb {
            return 0;
        }
        self.integral[yb * w1 + xb] + self.integral[ya * w1 + xa]
            - self.integral[ya * w1 + xb]
            - self.integral[yb * w1 + xa]
    }

    pub fn is_background(&self, x: u32, y: u32) -> bool {
        self.count_in(x as i64, y as i64, x as i64 + 1, y as i64 + 1) > 0
    }

    /// Whether any background pixel lies within Chebyshev distance `r`.
    pub fn background_within(&self, x: u32, y: u32, r: u32) -> bool {
        let (x, y, r) = (x as i64, y as i64, r as i64);
        self.count_in(x - r, y - r, x + r + 1, y + r + 1) > 0
    }

    pub fn all_background(&self) -> bool {
        self.count_in(0, 0, self.width as i64, self.height as i64) == self.width * self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingParams {
    pub n_max: usize,
    pub min_dist_px: f64,
    pub buffer_px: u32,
    pub seed: u64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            n_max: 256,
            min_dist_px: 100.0,
            buffer_px: 16,
            seed: 0,
        }
    }
}

/// Cells that are two-dimensional maxima of the grid: positive, and greater
/// than every 8-neighbour preceding them in raster order and not less than
/// every neighbour following them. On a plateau the first cell wins.
pub fn local_maxima(grid: &LoadGrid) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let v = grid.get(r, c);
            if v <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'nb: for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if nr < 0 || nc < 0 || nr >= grid.rows as isize || nc >= grid.cols as isize {
                        continue;
                    }
                    let n = grid.get(nr as usize, nc as usize);
                    let precedes = (nr, nc) < (r as isize, c as isize);
                    if (precedes && n >= v) || (!precedes && n > v) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                out.push((r, c));
            }
        }
    }
    out
}

/// Draw up to `n_max` mapel centres from the load maxima: candidates are
/// maxima whose cell centre keeps `buffer_px` from the background; they are
/// visited in seeded random order and accepted when at least `min_dist_px`
/// from every accepted centre. Returned in acceptance order.
pub fn sample_mapel_positions(
    grid: &LoadGrid,
    background: &BackgroundMask,
    params: &SamplingParams,
) -> Result<Vec<(u32, u32)>, ImageOpsError> {
    if params.n_max == 0 {
        return Err(ImageOpsError::InvalidParam("n_max must be at least 1".into()));
    }
    if background.all_background() {
        return Err(ImageOpsError::NoForeground);
    }
    let (w, h) = background.dims();
    let mut candidates: Vec<(u32, u32)> = local_maxima(grid)
        .into_iter()
        .map(|(r, c)| grid.cell_center(r, c, w, h))
        .filter(|&(x, y)| !background.background_within(x, y, params.buffer_px))
        .collect();
    let mut rng = rng_from(params.seed);
    candidates.shuffle(&mut rng);

    let min_d2 = params.min_dist_px * params.min_dist_px;
    let mut accepted: Vec<(u32, u32)> = Vec::new();
    for (x, y) in candidates {
        let ok = accepted.iter().all(|&(ax, ay)| {
            let dx = ax as f64 - x as f64;
            let dy = ay as f64 - y as f64;
            dx * dx + dy * dy >= min_d2
        });
        if ok {
            accepted.push((x, y));
            if accepted.len() == params.n_max {
                break;
            }
        }
    }
    Ok(accepted)
}

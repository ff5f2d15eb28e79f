use serde::{Deserialize, Serialize};

use super::filter::Plane;
use super::ImageOpsError;

/// Hysteresis thresholds on the L2 Sobel magnitude of 8-bit luminance.
pub const CANNY_LOW: f32 = 50.0;
pub const CANNY_HIGH: f32 = 150.0;

/// Binary edge image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl EdgeMap {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// Canny detector: Sobel gradients, non-maximum suppression along four
/// quantized directions (plateaus kept), 8-connected hysteresis. No
/// pre-blur; callers smooth first.
pub fn canny(img: &Plane, low: f32, high: f32) -> EdgeMap {
    let (w, h) = (img.width, img.height);
    let mut mag = vec![0f32; w * h];
    let mut dir = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let p = |dx: isize, dy: isize| img.get_clamped(x as isize + dx, y as isize + dy);
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let m = (gx * gx + gy * gy).sqrt();
            mag[y * w + x] = m;
            // 0: horizontal gradient, 1: 45°, 2: vertical, 3: 135° (image axes)
            let ang = gy.atan2(gx).to_degrees().rem_euclid(180.0);
            dir[y * w + x] = if !(22.5..157.5).contains(&ang) {
                0
            } else if ang < 67.5 {
                1
            } else if ang < 112.5 {
                2
            } else {
                3
            };
        }
    }

    let at = |x: isize, y: isize| -> f32 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    // 0 none, 1 weak, 2 strong
    let mut class = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m < low {
                continue;
            }
            let (xi, yi) = (x as isize, y as isize);
            let (a, b) = match dir[i] {
                0 => (at(xi - 1, yi), at(xi + 1, yi)),
                1 => (at(xi - 1, yi - 1), at(xi + 1, yi + 1)),
                2 => (at(xi, yi - 1), at(xi, yi + 1)),
                _ => (at(xi + 1, yi - 1), at(xi - 1, yi + 1)),
            };
            if m >= a && m >= b {
                class[i] = if m >= high { 2 } else { 1 };
            }
        }
    }

    let mut bits = vec![false; w * h];
    let mut stack: Vec<usize> = (0..w * h).filter(|&i| class[i] == 2).collect();
    for &i in &stack {
        bits[i] = true;
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !bits[j] && class[j] == 1 {
                    bits[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    EdgeMap {
        width: w,
        height: h,
        bits,
    }
}

/// Per-cell edge density ("graphic map load"). Partial cells at the right
/// and bottom borders are normalized by their own pixel count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadGrid {
    pub cell_px: u32,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl LoadGrid {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Pixel centre of a cell, clamped into a `width × height` image.
    pub fn cell_center(&self, row: usize, col: usize, width: u32, height: u32) -> (u32, u32) {
        let c = self.cell_px;
        let x = (col as u32 * c + c / 2).min(width.saturating_sub(1));
        let y = (row as u32 * c + c / 2).min(height.saturating_sub(1));
        (x, y)
    }
}

pub fn edge_density_grid(edges: &EdgeMap, cell_px: u32) -> Result<LoadGrid, ImageOpsError> {
    if cell_px < 8 {
        return Err(ImageOpsError::CellTooSmall(cell_px));
    }
    let c = cell_px as usize;
    if c > edges.width || c > edges.height {
        return Err(ImageOpsError::CellLargerThanImage {
            cell: cell_px,
            width: edges.width as u32,
            height: edges.height as u32,
        });
    }
    let rows = edges.height.div_ceil(c);
    let cols = edges.width.div_ceil(c);
    let mut counts = vec![0usize; rows * cols];
    for y in 0..edges.height {
        for x in 0..edges.width {
            if edges.bits[y * edges.width + x] {
                counts[(y / c) * cols + x / c] += 1;
            }
        }
    }
    let values = (0..rows * cols)
        .map(|i| {
            let (r, col) = (i / cols, i % cols);
            let ch = (edges.height - r * c).min(c);
            let cw = (edges.width - col * c).min(c);
            counts[i] as f64 / (ch * cw) as f64
        })
        .collect();
    Ok(LoadGrid {
        cell_px,
        rows,
        cols,
        values,
    })
}

/// Graphic load of a grayscale image: Canny (fixed thresholds) edge density
/// per `cell_px` cell.
pub fn graphic_load(img: &Plane, cell_px: u32) -> Result<LoadGrid, ImageOpsError> {
    edge_density_grid(&canny(img, CANNY_LOW, CANNY_HIGH), cell_px)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plane(w: usize, h: usize, f: impl Fn(usize, usize) -> f32) -> Plane {
        let mut p = Plane::new(w, h);
        for y in 0..h {
            for x in 0..w {
                p.data[y * w + x] = f(x, y);
            }
        }
        p
    }

    #[test]
    fn blank_image_has_zero_load() {
        let g = graphic_load(&plane(64, 64, |_, _| 255.0), 16).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
        assert_eq!((g.rows, g.cols), (4, 4));
    }

    #[test]
    fn two_pixel_checkerboard_saturates_interior_cells() {
        // every pixel sits next to a block boundary; the Sobel magnitude is
        // the same everywhere, so NMS keeps every pixel above threshold
        let p = plane(64, 64, |x, y| if ((x / 2) + (y / 2)) % 2 == 0 { 0.0 } else { 255.0 });
        let g = graphic_load(&p, 16).unwrap();
        for r in 1..3 {
            for c in 1..3 {
                assert!(g.get(r, c) > 0.9, "cell ({r},{c}) = {}", g.get(r, c));
            }
        }
    }

    #[test]
    fn half_hatched_image_is_monotone_left_to_right() {
        let p = plane(64, 32, |x, y| if x >= 32 && y % 4 == 0 { 0.0 } else { 255.0 });
        let g = graphic_load(&p, 16).unwrap();
        assert_eq!(g.get(0, 0), 0.0);
        assert_eq!(g.get(1, 0), 0.0);
        assert!(g.get(0, 3) > 0.0 && g.get(1, 3) > 0.0);
    }

    #[test]
    fn cell_size_errors() {
        let p = plane(20, 20, |_, _| 0.0);
        assert_eq!(graphic_load(&p, 4), Err(ImageOpsError::CellTooSmall(4)));
        assert!(matches!(
            graphic_load(&p, 32),
            Err(ImageOpsError::CellLargerThanImage { .. })
        ));
    }

    proptest! {
        #[test]
        fn adding_edge_pixels_never_lowers_density(
            seed_bits in proptest::collection::vec(any::<bool>(), 32 * 32),
            extra in proptest::collection::vec(0usize..32 * 32, 1..50),
        ) {
            let base = EdgeMap { width: 32, height: 32, bits: seed_bits };
            let mut more = base.clone();
            for i in extra {
                more.bits[i] = true;
            }
            let a = edge_density_grid(&base, 8).unwrap();
            let b = edge_density_grid(&more, 8).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!(y >= x);
            }
        }
    }
}

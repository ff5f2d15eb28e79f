use serde::{Deserialize, Serialize};

use super::{CompositionError, Result};
use crate::model::{shares, SemanticClass, SemanticMask, N_CLASSES};

/// Minimum non-background share for a row or column to count as content.
pub const CONTENT_THRESHOLD: f64 = 0.01;

/// Half-open pixel box `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl ContentBox {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }
}

/// Bounding box of the rows and columns whose non-background share exceeds
/// [`CONTENT_THRESHOLD`].
pub fn content_box(mask: &SemanticMask) -> Result<ContentBox> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut rows = vec![0u64; h];
    let mut cols = vec![0u64; w];
    for (i, &v) in mask.labels().iter().enumerate() {
        if v != SemanticClass::Background as u8 {
            rows[i / w] += 1;
            cols[i % w] += 1;
        }
    }
    let span = |p: &[u64], len: usize| {
        let ok = |&c: &u64| c as f64 > CONTENT_THRESHOLD * len as f64;
        let a = p.iter().position(ok)?;
        let b = p.iter().rposition(ok)?;
        Some((a as u32, b as u32 + 1))
    };
    let (x0, x1) = span(&cols, h).ok_or(CompositionError::NoContent)?;
    let (y0, y1) = span(&rows, w).ok_or(CompositionError::NoContent)?;
    Ok(ContentBox { x0, y0, x1, y1 })
}

/// Class composition of the nine quadrants of the content box, row-major
/// (quadrant 1 top-left, 9 bottom-right).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantProfile {
    pub bounds: ContentBox,
    pub counts: [[u64; N_CLASSES]; 9],
    /// Class shares per quadrant; an empty quadrant is all background.
    pub ratios: [[f64; N_CLASSES]; 9],
}

impl QuadrantProfile {
    /// Builds a profile from per-quadrant pixel counts.
    pub fn from_counts(bounds: ContentBox, counts: [[u64; N_CLASSES]; 9]) -> Self {
        let mut ratios = [[0.0; N_CLASSES]; 9];
        for (r, c) in ratios.iter_mut().zip(&counts) {
            *r = shares(c);
        }
        Self { bounds, counts, ratios }
    }
}

/// Splits `len` into three parts symmetric under reversal.
fn thirds(len: u32) -> [u32; 4] {
    let e = len / 3;
    [0, e, len - e, len]
}

pub fn quadrant_ratios(mask: &SemanticMask) -> Result<QuadrantProfile> {
    let b = content_box(mask)?;
    let (tx, ty) = (thirds(b.width()), thirds(b.height()));
    let mut counts = [[0u64; N_CLASSES]; 9];
    for r in 0..3 {
        for c in 0..3 {
            counts[r * 3 + c] = mask.class_counts_in(
                (b.x0 + tx[c]) as i64,
                (b.y0 + ty[r]) as i64,
                (b.x0 + tx[c + 1]) as i64,
                (b.y0 + ty[r + 1]) as i64,
            );
        }
    }
    Ok(QuadrantProfile::from_counts(b, counts))
}

/// Height over width of the content box.
pub fn shape_ratio(mask: &SemanticMask) -> Result<f64> {
    let b = content_box(mask)?;
    Ok(b.height() as f64 / b.width() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(mask: &mut SemanticMask, x0: u32, y0: u32, x1: u32, y1: u32, c: SemanticClass) {
        for y in y0..y1 {
            for x in x0..x1 {
                mask.set(x, y, c);
            }
        }
    }

    #[test]
    fn all_water() {
        let m = SemanticMask::filled(30, 20, SemanticClass::Water);
        let p = quadrant_ratios(&m).unwrap();
        assert!(p.ratios.iter().all(|r| r[SemanticClass::Water.index()] == 1.0));
        assert_eq!(shape_ratio(&m).unwrap(), 20.0 / 30.0);
    }

    #[test]
    fn centre_built() {
        let mut m = SemanticMask::filled(90, 90, SemanticClass::NonBuilt);
        rect(&mut m, 30, 30, 60, 60, SemanticClass::Built);
        let p = quadrant_ratios(&m).unwrap();
        assert_eq!(p.ratios[4][SemanticClass::Built.index()], 1.0);
        for q in [0, 2, 6, 8] {
            assert_eq!(p.ratios[q][SemanticClass::NonBuilt.index()], 1.0);
        }
    }

    #[test]
    fn blank_margin_is_trimmed() {
        let mut m = SemanticMask::filled(200, 100, SemanticClass::Background);
        rect(&mut m, 0, 0, 100, 100, SemanticClass::Road);
        let b = content_box(&m).unwrap();
        assert_eq!(b, ContentBox { x0: 0, y0: 0, x1: 100, y1: 100 });
        assert_eq!(shape_ratio(&m).unwrap(), 1.0);
        let mut m = SemanticMask::filled(300, 300, SemanticClass::Background);
        rect(&mut m, 50, 100, 250, 200, SemanticClass::Built);
        assert_eq!(shape_ratio(&m).unwrap(), 0.5);
    }

    #[test]
    fn row_below_threshold_is_not_content() {
        let mut m = SemanticMask::filled(200, 50, SemanticClass::Background);
        rect(&mut m, 0, 10, 200, 40, SemanticClass::Water);
        // two pixels on row 0: 1% of 200 is not exceeded
        rect(&mut m, 0, 0, 2, 1, SemanticClass::Water);
        assert_eq!(content_box(&m).unwrap().y0, 10);
        assert_eq!(
            quadrant_ratios(&SemanticMask::filled(5, 5, SemanticClass::Background)),
            Err(CompositionError::NoContent)
        );
    }

    #[test]
    fn tiny_box_has_background_quadrants() {
        let mut m = SemanticMask::filled(10, 10, SemanticClass::Background);
        rect(&mut m, 4, 4, 6, 6, SemanticClass::Built);
        let p = quadrant_ratios(&m).unwrap();
        // 2 px split into (0, 2, 0)
        assert_eq!(p.ratios[0][0], 1.0);
        assert_eq!(p.ratios[4][SemanticClass::Built.index()], 1.0);
        for r in &p.ratios {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

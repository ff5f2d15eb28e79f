//! Seeded synthetic maps with matching label masks, for tests and demos.

use image::{Rgb, RgbImage};
use rand::Rng;

use crate::model::{SemanticClass, SemanticMask};
use crate::rng::rng_from;

const PAPER: Rgb<u8> = Rgb([246, 242, 230]);
const INK: Rgb<u8> = Rgb([30, 30, 30]);

fn put(img: &mut RgbImage, mask: &mut SemanticMask, x: i64, y: i64, c: Rgb<u8>, class: SemanticClass) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
        mask.set(x as u32, y as u32, class);
    }
}

fn line(img: &mut RgbImage, mask: &mut SemanticMask, a: (f64, f64), b: (f64, f64), width: f64, c: Rgb<u8>, class: SemanticClass) {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt().max(1.0);
    let steps = (len * 2.0) as usize;
    let r = (width / 2.0).max(0.5);
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let (cx, cy) = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        let ri = r.ceil() as i64;
        for dy in -ri..=ri {
            for dx in -ri..=ri {
                if ((dx * dx + dy * dy) as f64) <= r * r {
                    put(img, mask, cx.round() as i64 + dx, cy.round() as i64 + dy, c, class);
                }
            }
        }
    }
}

/// A synthetic map: a framed sheet with a hatched water body, built
/// blocks, a road network, stippled countryside and contour lines. The mask
/// labels every drawn pixel; untouched paper is background.
pub fn synthetic_map(width: u32, height: u32, seed: u64) -> (RgbImage, SemanticMask) {
    let mut rng = rng_from(seed);
    let mut img = RgbImage::from_pixel(width, height, PAPER);
    let mut mask = SemanticMask::filled(width, height, SemanticClass::Background);
    let (w, h) = (width as f64, height as f64);
    let margin = (w.min(h) * 0.06).max(4.0);

    // countryside stipple over the map body
    let stipple_pitch = 7 + rng.random_range(0..4);
    for y in (margin as u32..(h - margin) as u32).step_by(stipple_pitch) {
        for x in (margin as u32..(w - margin) as u32).step_by(stipple_pitch) {
            let jx = rng.random_range(0..3) as i64;
            let jy = rng.random_range(0..3) as i64;
            put(&mut img, &mut mask, x as i64 + jx, y as i64 + jy, Rgb([90, 120, 70]), SemanticClass::NonBuilt);
        }
    }
    // fill mask for the countryside area between stipples
    for y in margin as u32..(h - margin) as u32 {
        for x in margin as u32..(w - margin) as u32 {
            if mask.get(x, y) == SemanticClass::Background as u8 {
                mask.set(x, y, SemanticClass::NonBuilt);
            }
        }
    }

    // water body: an ellipse with wavy hatching
    let (ex, ey) = (rng.random_range(0.25..0.45) * w, rng.random_range(0.25..0.75) * h);
    let (ra, rb) = (rng.random_range(0.08..0.16) * w, rng.random_range(0.08..0.16) * h);
    for y in 0..height {
        for x in 0..width {
            let (dx, dy) = ((x as f64 - ex) / ra, (y as f64 - ey) / rb);
            if dx * dx + dy * dy <= 1.0 {
                let wave = (y as f64 + 2.0 * (x as f64 / 9.0).sin()).rem_euclid(6.0);
                let c = if wave < 1.5 { Rgb([40, 80, 170]) } else { Rgb([200, 220, 240]) };
                put(&mut img, &mut mask, x as i64, y as i64, c, SemanticClass::Water);
            }
        }
    }

    // built blocks: dark squares with a gap lattice
    let n_blocks = 6 + rng.random_range(0..6);
    for _ in 0..n_blocks {
        let bx = rng.random_range(0.55..0.85) * w;
        let by = rng.random_range(0.15..0.85) * h;
        let side = rng.random_range(0.02..0.05) * w.min(h);
        for y in by as i64..(by + side) as i64 {
            for x in bx as i64..(bx + side) as i64 {
                let c = if (x + y) % 5 == 0 { PAPER } else { Rgb([150, 60, 60]) };
                put(&mut img, &mut mask, x, y, c, SemanticClass::Built);
            }
        }
    }

    // contour lines: concentric rings
    let (cx, cy) = (rng.random_range(0.3..0.7) * w, rng.random_range(0.6..0.85) * h);
    for k in 1..5 {
        let r = k as f64 * 0.035 * w.min(h);
        let n = (r * 8.0) as usize;
        for i in 0..n {
            let t0 = i as f64 / n as f64 * std::f64::consts::TAU;
            let t1 = (i + 1) as f64 / n as f64 * std::f64::consts::TAU;
            line(
                &mut img,
                &mut mask,
                (cx + r * t0.cos(), cy + r * 0.7 * t0.sin()),
                (cx + r * t1.cos(), cy + r * 0.7 * t1.sin()),
                1.0,
                Rgb([140, 90, 40]),
                SemanticClass::Contours,
            );
        }
    }

    // roads: a few straight double-width strokes
    let n_roads = 3 + rng.random_range(0..3);
    for _ in 0..n_roads {
        let a = (rng.random_range(margin..w - margin), rng.random_range(margin..h - margin));
        let b = (rng.random_range(margin..w - margin), rng.random_range(margin..h - margin));
        let width = rng.random_range(2.0..5.0);
        line(&mut img, &mut mask, a, b, width, INK, SemanticClass::Road);
    }

    // frame
    for (a, b) in [
        ((margin, margin), (w - margin, margin)),
        ((w - margin, margin), (w - margin, h - margin)),
        ((w - margin, h - margin), (margin, h - margin)),
        ((margin, h - margin), (margin, margin)),
    ] {
        line(&mut img, &mut mask, a, b, 3.0, INK, SemanticClass::Contours);
    }
    (img, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_labelled() {
        let (a, ma) = synthetic_map(300, 200, 5);
        let (b, mb) = synthetic_map(300, 200, 5);
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        let shares = ma.class_shares();
        assert!(shares.iter().all(|&s| s > 0.0), "{shares:?}");
    }
}

use serde::{Deserialize, Serialize};

use super::filter::Plane;

pub const HOG_BINS: usize = 9;
const BIN_DEG: f64 = 180.0 / HOG_BINS as f64;

/// Dominant stroke direction of a patch, degrees in `[0, 180)`.
///
/// The angle is measured counter-clockwise as displayed; vertical strokes
/// (horizontal gradients) are 0°.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub degrees: f64,
    /// Summed gradient magnitude over the patch.
    pub energy: f64,
    pub hist: [f64; HOG_BINS],
}

impl Orientation {
    pub fn is_zero_energy(&self) -> bool {
        self.energy == 0.0
    }
}

fn gradients(p: &Plane) -> Vec<(f64, f64)> {
    // Sobel on interior pixels, angle in [0, 180) and magnitude
    let (w, h) = (p.width, p.height);
    let mut out = Vec::with_capacity(w.saturating_sub(2) * h.saturating_sub(2));
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let g = |dx: isize, dy: isize| p.get((x as isize + dx) as usize, (y as isize + dy) as usize) as f64;
            let gx = (g(1, -1) + 2.0 * g(1, 0) + g(1, 1)) - (g(-1, -1) + 2.0 * g(-1, 0) + g(-1, 1));
            let gy = (g(-1, 1) + 2.0 * g(0, 1) + g(1, 1)) - (g(-1, -1) + 2.0 * g(0, -1) + g(1, -1));
            let m = gx.hypot(gy);
            if m > 0.0 {
                // image y points down; flip it so angles are CCW as displayed
                let a = (-gy).atan2(gx).to_degrees().rem_euclid(180.0);
                out.push((a, m));
            }
        }
    }
    out
}

/// 9-bin unsigned orientation histogram with bins centred on 0°, 20°, …,
/// 160°; each gradient splits its magnitude linearly between the two
/// nearest centres.
fn hog(grads: &[(f64, f64)]) -> [f64; HOG_BINS] {
    let mut hist = [0.0; HOG_BINS];
    for &(a, m) in grads {
        let pos = a / BIN_DEG;
        let lo = pos.floor() as usize % HOG_BINS;
        let frac = pos - pos.floor();
        hist[lo] += m * (1.0 - frac);
        hist[(lo + 1) % HOG_BINS] += m * frac;
    }
    hist
}

fn circ_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

/// Principal orientation: the peak bin of the patch HOG, refined by the
/// magnitude-weighted doubled-angle mean of gradients within 1.5 bins of
/// the peak centre. Zero-gradient patches return 0°.
pub fn principal_orientation(patch: &Plane) -> Orientation {
    let grads = gradients(patch);
    let hist = hog(&grads);
    let energy: f64 = grads.iter().map(|g| g.1).sum();
    if energy == 0.0 {
        return Orientation {
            degrees: 0.0,
            energy,
            hist,
        };
    }
    let peak = hist
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > hist[best] { i } else { best });
    let centre = peak as f64 * BIN_DEG;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(a, m) in &grads {
        if circ_diff(a, centre) <= 1.5 * BIN_DEG {
            let r = (2.0 * a).to_radians();
            sx += m * r.cos();
            sy += m * r.sin();
        }
    }
    let degrees = if sx == 0.0 && sy == 0.0 {
        centre
    } else {
        (sy.atan2(sx).to_degrees() / 2.0).rem_euclid(180.0)
    };
    // rem_euclid can round up to exactly 180
    let degrees = if degrees >= 180.0 { 0.0 } else { degrees };
    Orientation {
        degrees,
        energy,
        hist,
    }
}

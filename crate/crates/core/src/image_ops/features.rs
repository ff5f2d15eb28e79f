use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::edges::{canny, CANNY_HIGH, CANNY_LOW};
use super::filter::{luminance, Plane};
use super::ImageOpsError;

pub const LBP_BINS: usize = 10;
/// Rotation-invariant uniform code of a neighbourhood with no darker
/// neighbour (every bit set).
pub const LBP_FLAT_BIN: usize = 8;
const COLOR_BINS_PER_CHANNEL: usize = 4;
const HARRIS_K: f64 = 0.04;
const HARRIS_SIGMA: f64 = 1.0;

/// Hand-crafted descriptor of an RGB patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// 4×4×4 joint RGB histogram, normalized.
    pub color_hist: Vec<f64>,
    /// Mean, standard deviation and skewness of H, L, S.
    pub hls_moments: [f64; 9],
    /// Mean, standard deviation and skewness of C, M, Y, K.
    pub cmyk_moments: [f64; 12],
    pub lbp_hist: [f64; LBP_BINS],
    pub n_components: usize,
    pub line_width: f64,
    pub graphic_load: f64,
    pub harris_max: f64,
    pub bg_color: [f64; 3],
    pub fg_color: [f64; 3],
}

impl FeatureVector {
    pub const LEN: usize = 64 + 9 + 12 + LBP_BINS + 4 + 6;

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::LEN);
        v.extend_from_slice(&self.color_hist);
        v.extend_from_slice(&self.hls_moments);
        v.extend_from_slice(&self.cmyk_moments);
        v.extend_from_slice(&self.lbp_hist);
        v.push(self.n_components as f64);
        v.push(self.line_width);
        v.push(self.graphic_load);
        v.push(self.harris_max);
        v.extend_from_slice(&self.bg_color);
        v.extend_from_slice(&self.fg_color);
        v
    }
}

/// Mean, population standard deviation, and cube root of the third
/// central moment.
fn moments(xs: &[f64]) -> [f64; 3] {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return [0.0; 3];
    }
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let t = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    [m, v.sqrt(), t.cbrt()]
}

fn rgb_to_hls(r: f64, g: f64, b: f64) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let l = (max + min) / 2.0;
    if max == min {
        return [0.0, l, 0.0];
    }
    let d = max - min;
    let s = if l <= 0.5 { d / (max + min) } else { d / (2.0 - max - min) };
    let rc = (max - r) / d;
    let gc = (max - g) / d;
    let bc = (max - b) / d;
    let h = if r == max {
        bc - gc
    } else if g == max {
        2.0 + rc - bc
    } else {
        4.0 + gc - rc
    };
    [(h / 6.0).rem_euclid(1.0), l, s]
}

fn rgb_to_cmyk(r: f64, g: f64, b: f64) -> [f64; 4] {
    let k = 1.0 - r.max(g).max(b);
    if k >= 1.0 {
        return [0.0, 0.0, 0.0, 1.0];
    }
    [
        (1.0 - r - k) / (1.0 - k),
        (1.0 - g - k) / (1.0 - k),
        (1.0 - b - k) / (1.0 - k),
        k,
    ]
}

/// Otsu threshold of 8-bit values: the lowest `t` maximizing the
/// between-class variance of `{v ≤ t}` and `{v > t}`. `None` when fewer
/// than two distinct levels occur.
pub fn otsu_threshold(values: &[u8]) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in values {
        hist[v as usize] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best = (0u8, -1.0);
    for t in 0..255usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1).powi(2);
        if between > best.1 {
            best = (t as u8, between);
        }
    }
    Some(best.0)
}

/// 8-connected components of a binary mask: `(count, labels)` with label
/// 0 for unset pixels and components numbered from 1 in raster order.
pub fn connected_components(mask: &[bool], width: usize, height: usize) -> (usize, Vec<u32>) {
    let mut labels = vec![0u32; mask.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % width) as isize, (i / width) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                        continue;
                    }
                    let j = ny as usize * width + nx as usize;
                    if mask[j] && labels[j] == 0 {
                        labels[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
    }
    (next as usize, labels)
}

/// Mean stroke thickness `2·area/perimeter`, where the perimeter counts set
/// pixels with a 4-neighbour that is unset or outside the image.
pub fn line_width(mask: &[bool], width: usize, height: usize) -> f64 {
    let mut area = 0usize;
    let mut perimeter = 0usize;
    for y in 0..height {
        for x in 0..width {
            if !mask[y * width + x] {
                continue;
            }
            area += 1;
            let on = |nx: isize, ny: isize| {
                nx >= 0
                    && ny >= 0
                    && nx < width as isize
                    && ny < height as isize
                    && mask[ny as usize * width + nx as usize]
            };
            let (xi, yi) = (x as isize, y as isize);
            if !(on(xi - 1, yi) && on(xi + 1, yi) && on(xi, yi - 1) && on(xi, yi + 1)) {
                perimeter += 1;
            }
        }
    }
    if perimeter == 0 {
        0.0
    } else {
        2.0 * area as f64 / perimeter as f64
    }
}

/// Rotation-invariant uniform LBP (8 neighbours, radius 1), normalized.
/// Bins 0–8 hold uniform patterns by number of set bits, bin 9 the rest.
pub fn lbp_histogram(p: &Plane) -> [f64; LBP_BINS] {
    const OFFS: [(isize, isize); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];
    let mut hist = [0.0; LBP_BINS];
    let n = p.width * p.height;
    if n == 0 {
        return hist;
    }
    for y in 0..p.height as isize {
        for x in 0..p.width as isize {
            let c = p.get(x as usize, y as usize);
            let bits: Vec<bool> = OFFS
                .iter()
                .map(|&(dx, dy)| p.get_clamped(x + dx, y + dy) >= c)
                .collect();
            let transitions = (0..8).filter(|&i| bits[i] != bits[(i + 1) % 8]).count();
            let bin = if transitions <= 2 {
                bits.iter().filter(|&&b| b).count()
            } else {
                LBP_BINS - 1
            };
            hist[bin] += 1.0;
        }
    }
    hist.iter_mut().for_each(|v| *v /= n as f64);
    hist
}

fn gaussian_blur(data: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let ks: f64 = k.iter().sum();
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (-r..=r)
                .map(|i| k[(i + r) as usize] * data[y * w + clamp(x as isize + i, w)])
                .sum::<f64>()
                / ks;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (-r..=r)
                .map(|i| k[(i + r) as usize] * tmp[clamp(y as isize + i, h) * w + x])
                .sum::<f64>()
                / ks;
        }
    }
    out
}

/// Maximum Harris response `det(M) − k·tr(M)²` with Sobel gradients of the
/// unit-scaled luminance and a Gaussian window.
fn harris_max(p: &Plane) -> f64 {
    let (w, h) = (p.width, p.height);
    if w == 0 || h == 0 {
        return 0.0;
    }
    let mut ixx = vec![0.0; w * h];
    let mut iyy = vec![0.0; w * h];
    let mut ixy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let g = |dx: isize, dy: isize| p.get_clamped(x + dx, y + dy) as f64 / 255.0;
            let gx = (g(1, -1) + 2.0 * g(1, 0) + g(1, 1)) - (g(-1, -1) + 2.0 * g(-1, 0) + g(-1, 1));
            let gy = (g(-1, 1) + 2.0 * g(0, 1) + g(1, 1)) - (g(-1, -1) + 2.0 * g(0, -1) + g(1, -1));
            let i = y as usize * w + x as usize;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }
    let (sxx, syy, sxy) = (
        gaussian_blur(&ixx, w, h, HARRIS_SIGMA),
        gaussian_blur(&iyy, w, h, HARRIS_SIGMA),
        gaussian_blur(&ixy, w, h, HARRIS_SIGMA),
    );
    (0..w * h)
        .map(|i| sxx[i] * syy[i] - sxy[i] * sxy[i] - HARRIS_K * (sxx[i] + syy[i]).powi(2))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Background and foreground colours of a patch under a soft foreground
/// map `y ∈ [0,1]`: background weights `1 − √y`, foreground weights `y`.
pub fn foreground_weighted_color(
    patch: &RgbImage,
    weights: &Plane,
) -> Result<([f64; 3], [f64; 3]), ImageOpsError> {
    let dims = (patch.width(), patch.height());
    let wd = (weights.width as u32, weights.height as u32);
    if dims != wd {
        return Err(ImageOpsError::ShapeMismatch {
            expected: dims,
            got: wd,
        });
    }
    let mut bg = [0.0; 3];
    let mut fg = [0.0; 3];
    let (mut wb, mut wf) = (0.0, 0.0);
    for (px, &y) in patch.pixels().zip(&weights.data) {
        let y = (y as f64).clamp(0.0, 1.0);
        let b = 1.0 - y.sqrt();
        for c in 0..3 {
            bg[c] += b * px[c] as f64;
            fg[c] += y * px[c] as f64;
        }
        wb += b;
        wf += y;
    }
    if wb == 0.0 || wf == 0.0 {
        return Err(ImageOpsError::AllZeroWeights);
    }
    Ok((bg.map(|v| v / wb), fg.map(|v| v / wf)))
}

/// Full descriptor of an RGB patch. Ink is the Otsu foreground (luminance
/// at or below the threshold); a patch with a single grey level has none.
pub fn cv_features(patch: &RgbImage) -> FeatureVector {
    let (w, h) = (patch.width() as usize, patch.height() as usize);
    let n = (w * h).max(1) as f64;

    let mut color_hist = vec![0.0; 64];
    let mut hls: [Vec<f64>; 3] = Default::default();
    let mut cmyk: [Vec<f64>; 4] = Default::default();
    for px in patch.pixels() {
        let bin = |v: u8| v as usize * COLOR_BINS_PER_CHANNEL / 256;
        color_hist[bin(px[0]) * 16 + bin(px[1]) * 4 + bin(px[2])] += 1.0;
        let (r, g, b) = (px[0] as f64 / 255.0, px[1] as f64 / 255.0, px[2] as f64 / 255.0);
        for (dst, v) in hls.iter_mut().zip(rgb_to_hls(r, g, b)) {
            dst.push(v);
        }
        for (dst, v) in cmyk.iter_mut().zip(rgb_to_cmyk(r, g, b)) {
            dst.push(v);
        }
    }
    color_hist.iter_mut().for_each(|v| *v /= n);
    let mut hls_moments = [0.0; 9];
    for (i, ch) in hls.iter().enumerate() {
        hls_moments[i * 3..i * 3 + 3].copy_from_slice(&moments(ch));
    }
    let mut cmyk_moments = [0.0; 12];
    for (i, ch) in cmyk.iter().enumerate() {
        cmyk_moments[i * 3..i * 3 + 3].copy_from_slice(&moments(ch));
    }

    let luma = luminance(patch);
    let luma8: Vec<u8> = luma.data.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    let ink: Vec<bool> = match otsu_threshold(&luma8) {
        Some(t) => luma8.iter().map(|&v| v <= t).collect(),
        None => vec![false; w * h],
    };
    let (n_components, _) = connected_components(&ink, w, h);
    let graphic_load = canny(&luma, CANNY_LOW, CANNY_HIGH).count() as f64 / n;

    let ink_plane = Plane {
        width: w,
        height: h,
        data: ink.iter().map(|&b| b as u8 as f32).collect(),
    };
    let (bg_color, fg_color) = match foreground_weighted_color(patch, &ink_plane) {
        Ok(c) => c,
        Err(_) => {
            let mut m = [0.0; 3];
            for px in patch.pixels() {
                for c in 0..3 {
                    m[c] += px[c] as f64;
                }
            }
            let m = m.map(|v| v / n);
            (m, m)
        }
    };

    FeatureVector {
        color_hist,
        hls_moments,
        cmyk_moments,
        lbp_hist: lbp_histogram(&luma),
        n_components,
        line_width: line_width(&ink, w, h),
        graphic_load,
        harris_max: harris_max(&luma),
        bg_color,
        fg_color,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn white_patch() {
        let f = cv_features(&RgbImage::from_pixel(49, 49, Rgb([255, 255, 255])));
        assert_eq!(f.graphic_load, 0.0);
        assert_eq!(f.n_components, 0);
        assert_eq!(f.color_hist[63], 1.0);
        assert_eq!(f.line_width, 0.0);
        assert_eq!(f.bg_color, [255.0; 3]);
        assert_eq!(f.flatten().len(), FeatureVector::LEN);
    }

    #[test]
    fn black_square_on_white() {
        let mut img = RgbImage::from_pixel(49, 49, Rgb([255, 255, 255]));
        for y in 20..30 {
            for x in 15..25 {
                img.put_pixel(x, y, Rgb([0, 0, 0]));
            }
        }
        let f = cv_features(&img);
        assert_eq!(f.n_components, 1);
        // area 100, perimeter 4*10 - 4 corners counted once = 36
        assert!((f.line_width - 200.0 / 36.0).abs() < 1e-12);
        assert_eq!(f.fg_color, [0.0; 3]);
        assert_eq!(f.bg_color, [255.0; 3]);
        assert!(f.graphic_load > 0.0);
        assert!(f.harris_max > 0.0);
    }

    #[test]
    fn uniform_grey_is_all_flat_lbp() {
        let f = cv_features(&RgbImage::from_pixel(20, 20, Rgb([128, 128, 128])));
        assert_eq!(f.lbp_hist[LBP_FLAT_BIN], 1.0);
    }

    #[test]
    fn histograms_are_normalized() {
        let img = RgbImage::from_fn(31, 17, |x, y| Rgb([(x * 8) as u8, (y * 15) as u8, ((x * y) % 256) as u8]));
        let f = cv_features(&img);
        assert!((f.color_hist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((f.lbp_hist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hls_and_cmyk_primaries() {
        assert_eq!(rgb_to_hls(1.0, 0.0, 0.0), [0.0, 0.5, 1.0]);
        let h = rgb_to_hls(0.0, 0.0, 1.0);
        assert!((h[0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(rgb_to_cmyk(0.0, 0.0, 0.0), [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(rgb_to_cmyk(1.0, 1.0, 0.0), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn otsu_splits_two_levels() {
        let v: Vec<u8> = [vec![40u8; 50], vec![200u8; 50]].concat();
        let t = otsu_threshold(&v).unwrap();
        assert!((40..200).contains(&t));
        assert_eq!(otsu_threshold(&[9, 9, 9]), None);
    }

    #[test]
    fn diagonal_pixels_join_components() {
        let m = [true, false, false, true];
        assert_eq!(connected_components(&m, 2, 2).0, 1);
        let m = [true, false, true, false, false, false, true, false, true];
        assert_eq!(connected_components(&m, 3, 3).0, 4);
    }

    #[test]
    fn weighted_colour_cases() {
        let uni = RgbImage::from_pixel(4, 4, Rgb([10, 20, 30]));
        let mut w = Plane::new(4, 4);
        w.data.iter_mut().enumerate().for_each(|(i, v)| *v = (i as f32) / 16.0);
        let (bg, fg) = foreground_weighted_color(&uni, &w).unwrap();
        for (a, b) in bg.iter().zip(&fg) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((bg[1] - 20.0).abs() < 1e-9);

        // half black (left) with y = 1 there, white elsewhere
        let img = RgbImage::from_fn(4, 2, |x, _| if x < 2 { Rgb([0, 0, 0]) } else { Rgb([255, 255, 255]) });
        let y = Plane {
            width: 4,
            height: 2,
            data: (0..8).map(|i| if i % 4 < 2 { 1.0 } else { 0.0 }).collect(),
        };
        let (bg, fg) = foreground_weighted_color(&img, &y).unwrap();
        assert_eq!(fg, [0.0; 3]);
        assert_eq!(bg, [255.0; 3]);

        // y = 0.25 everywhere: bg weight 0.5 uniform, i.e. the plain mean
        let q = Plane {
            width: 4,
            height: 2,
            data: vec![0.25; 8],
        };
        let (bg, _) = foreground_weighted_color(&img, &q).unwrap();
        assert!((bg[0] - 127.5).abs() < 1e-9);

        let zero = Plane::new(4, 2);
        assert_eq!(foreground_weighted_color(&img, &zero), Err(ImageOpsError::AllZeroWeights));
    }
}

use image::{GrayImage, Rgb, RgbImage};
use rayon::prelude::*;

/// Single-channel `f32` image, values on the 0–255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.as_raw().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_gray(&self) -> GrayImage {
        let raw = self
            .data
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect();
        GrayImage::from_raw(self.width as u32, self.height as u32, raw).unwrap()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Clamp-to-edge access.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }
}

/// Rec. 601 luma of an RGB image.
pub fn luminance(img: &RgbImage) -> Plane {
    Plane {
        width: img.width() as usize,
        height: img.height() as usize,
        data: img
            .pixels()
            .map(|p| 0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32)
            .collect(),
    }
}

fn spatial_kernel(sigma: f32) -> (isize, Vec<f32>) {
    let radius = (2.0 * sigma).ceil().max(1.0) as isize;
    let side = (2 * radius + 1) as usize;
    let mut k = Vec::with_capacity(side * side);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let d2 = (dx * dx + dy * dy) as f32;
            k.push((-d2 / (2.0 * sigma * sigma)).exp());
        }
    }
    (radius, k)
}

/// `exp(x)` for `x ≤ 0` by range reduction and a degree-6 polynomial;
/// relative error below 3e-7, and branch-free so tap loops vectorize.
#[inline(always)]
fn fast_exp(x: f32) -> f32 {
    let x = x.max(-80.0);
    let v = x * std::f32::consts::LOG2_E + 12_582_912.0;
    let n = v - 12_582_912.0;
    let r = x - n * 0.693_359_4 + n * 2.121_944_4e-4;
    let p = 1.0 + r * (1.0 + r * (0.5 + r * (0.166_666_67 + r * (0.041_666_5 + r * (0.008_333_5 + r * 0.001_393_1)))));
    let e = v.to_bits().wrapping_sub(0x4B40_0000);
    p * f32::from_bits(e.wrapping_add(127) << 23)
}

const TILE: usize = 256;

struct Tile<'a> {
    planes: [&'a [f32]; 3],
    centre: [&'a [f32]; 3],
    pw: usize,
    y: usize,
    x0: usize,
    n: usize,
    radius: usize,
    ks: f32,
    kr: f32,
}

#[inline(always)]
fn accumulate_taps(t: &Tile, wsum: &mut [f32; TILE], acc: &mut [[f32; TILE]; 3]) {
    let n = t.n;
    let (c0, c1, c2) = (&t.centre[0][..n], &t.centre[1][..n], &t.centre[2][..n]);
    let side = 2 * t.radius + 1;
    let [a0, a1, a2] = acc;
    let (a0, a1, a2, ws) = (&mut a0[..n], &mut a1[..n], &mut a2[..n], &mut wsum[..n]);
    for ky in 0..side {
        let dy = ky as f32 - t.radius as f32;
        for kx in 0..side {
            let dx = kx as f32 - t.radius as f32;
            let sp = (dx * dx + dy * dy) * t.ks;
            let base = (t.y + ky) * t.pw + t.x0 + kx;
            let s0 = &t.planes[0][base..][..n];
            let s1 = &t.planes[1][base..][..n];
            let s2 = &t.planes[2][base..][..n];
            for x in 0..n {
                let (d0, d1, d2) = (s0[x] - c0[x], s1[x] - c1[x], s2[x] - c2[x]);
                let wt = fast_exp(-(sp + (d0 * d0 + d1 * d1 + d2 * d2) * t.kr));
                ws[x] += wt;
                a0[x] += wt * s0[x];
                a1[x] += wt * s1[x];
                a2[x] += wt * s2[x];
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn accumulate_taps_avx2(t: &Tile, wsum: &mut [f32; TILE], acc: &mut [[f32; TILE]; 3]) {
    accumulate_taps(t, wsum, acc)
}

fn accumulate(t: &Tile, wsum: &mut [f32; TILE], acc: &mut [[f32; TILE]; 3]) {
    // same arithmetic either way (no FMA contraction), so output is identical
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2
        return unsafe { accumulate_taps_avx2(t, wsum, acc) };
    }
    accumulate_taps(t, wsum, acc)
}

/// Edge-preserving smoothing. `spatial_sigma` is in pixels, `range_sigma`
/// on the unit intensity scale (so `25.0 / 255.0` is 25 grey levels).
/// The window is truncated at `2·spatial_sigma`; borders clamp to edge.
pub fn bilateral_smooth(img: &RgbImage, spatial_sigma: f32, range_sigma: f32) -> RgbImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 || spatial_sigma <= 0.0 || range_sigma <= 0.0 {
        return img.clone();
    }
    let r = (2.0 * spatial_sigma).ceil().max(1.0) as usize;
    let rs = range_sigma * 255.0;
    let ks = 1.0 / (2.0 * spatial_sigma * spatial_sigma);
    let kr = 1.0 / (2.0 * rs * rs);
    // edge-replicated channel planes so windows never need bounds checks
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let mut planes = [vec![0f32; pw * ph], vec![0f32; pw * ph], vec![0f32; pw * ph]];
    for py in 0..ph {
        let y = py.saturating_sub(r).min(h - 1);
        for px in 0..pw {
            let x = px.saturating_sub(r).min(w - 1);
            let p = img.get_pixel(x as u32, y as u32);
            for i in 0..3 {
                planes[i][py * pw + px] = p[i] as f32;
            }
        }
    }
    let mut out = vec![0u8; w * h * 3];
    out.par_chunks_mut(w * 3).enumerate().for_each(|(y, row)| {
        let mut wsum = [0f32; TILE];
        let mut acc = [[0f32; TILE]; 3];
        for x0 in (0..w).step_by(TILE) {
            let n = TILE.min(w - x0);
            let c = (y + r) * pw + x0 + r;
            let tile = Tile {
                planes: [&planes[0], &planes[1], &planes[2]],
                centre: [&planes[0][c..c + n], &planes[1][c..c + n], &planes[2][c..c + n]],
                pw,
                y,
                x0,
                n,
                radius: r,
                ks,
                kr,
            };
            wsum.fill(0.0);
            acc.iter_mut().for_each(|a| a.fill(0.0));
            accumulate(&tile, &mut wsum, &mut acc);
            for x in 0..n {
                for i in 0..3 {
                    row[(x0 + x) * 3 + i] = (acc[i][x] / wsum[x]).round().clamp(0.0, 255.0) as u8;
                }
            }
        }
    });
    RgbImage::from_raw(w as u32, h as u32, out).unwrap()
}

/// Grayscale variant of [`bilateral_smooth`], returning unrounded values.
pub fn bilateral_smooth_gray(img: &Plane, spatial_sigma: f32, range_sigma: f32) -> Plane {
    let (w, h) = (img.width, img.height);
    if w == 0 || h == 0 || spatial_sigma <= 0.0 || range_sigma <= 0.0 {
        return img.clone();
    }
    let (radius, spatial) = spatial_kernel(spatial_sigma);
    let side = (2 * radius + 1) as usize;
    let rs = range_sigma * 255.0;
    let mut out = vec![0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let c = img.get(x, y);
            let (mut acc, mut wsum) = (0f32, 0f32);
            for (ky, dy) in (-radius..=radius).enumerate() {
                for (kx, dx) in (-radius..=radius).enumerate() {
                    let p = img.get_clamped(x as isize + dx, y as isize + dy);
                    let d = p - c;
                    let wt = spatial[ky * side + kx] * (-(d * d) / (2.0 * rs * rs)).exp();
                    wsum += wt;
                    acc += wt * p;
                }
            }
            *o = acc / wsum;
        }
    });
    Plane {
        width: w,
        height: h,
        data: out,
    }
}

fn bilinear(img: &RgbImage, sx: f32, sy: f32, fill: [u8; 3]) -> [f32; 3] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x0 = sx.floor() as i64;
    let y0 = sy.floor() as i64;
    let fx = sx - x0 as f32;
    let fy = sy - y0 as f32;
    let px = |x: i64, y: i64| -> [f32; 3] {
        if x < 0 || y < 0 || x >= w || y >= h {
            [fill[0] as f32, fill[1] as f32, fill[2] as f32]
        } else {
            let p = img.get_pixel(x as u32, y as u32);
            [p[0] as f32, p[1] as f32, p[2] as f32]
        }
    };
    let (a, b, c, d) = (px(x0, y0), px(x0 + 1, y0), px(x0, y0 + 1), px(x0 + 1, y0 + 1));
    let mut out = [0f32; 3];
    for i in 0..3 {
        let top = a[i] + fx * (b[i] - a[i]);
        let bot = c[i] + fx * (d[i] - c[i]);
        out[i] = top + fy * (bot - top);
    }
    out
}

/// Crop a `size × size` square centred on `center` after rotating the
/// content by `angle_deg` (counter-clockwise as displayed). Pixels falling
/// outside the source take `fill`. Bilinear interpolation.
pub fn rotate_crop(
    img: &RgbImage,
    center: (f32, f32),
    angle_deg: f32,
    size: u32,
    fill: [u8; 3],
) -> RgbImage {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let half = (size as f32 - 1.0) / 2.0;
    RgbImage::from_fn(size, size, |u, v| {
        let du = u as f32 - half;
        let dv = v as f32 - half;
        let sx = center.0 + du * c - dv * s;
        let sy = center.1 + du * s + dv * c;
        let p = bilinear(img, sx, sy, fill);
        Rgb([
            p[0].round().clamp(0.0, 255.0) as u8,
            p[1].round().clamp(0.0, 255.0) as u8,
            p[2].round().clamp(0.0, 255.0) as u8,
        ])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_exp_tracks_exp() {
        for i in 0..=80_000 {
            let x = -(i as f32) * 1e-3;
            let (got, want) = (fast_exp(x) as f64, (x as f64).exp());
            assert!(((got - want) / want).abs() < 5e-7, "{x}: {got} vs {want}");
        }
        assert!(fast_exp(-1e4) < 1e-30);
    }

    #[test]
    fn rgb_matches_direct_evaluation() {
        let img = RgbImage::from_fn(23, 17, |x, y| Rgb([(x * 11 % 256) as u8, (y * 15) as u8, ((x * y) % 200) as u8]));
        let (ss, rs) = (1.5f32, 25.0f64);
        let out = bilateral_smooth(&img, ss, rs as f32 / 255.0);
        for y in 0..17i64 {
            for x in 0..23i64 {
                let c = img.get_pixel(x as u32, y as u32);
                let (mut num, mut den) = ([0f64; 3], 0f64);
                for dy in -3i64..=3 {
                    for dx in -3i64..=3 {
                        let p = img.get_pixel((x + dx).clamp(0, 22) as u32, (y + dy).clamp(0, 16) as u32);
                        let d2: f64 = (0..3).map(|i| (p[i] as f64 - c[i] as f64).powi(2)).sum();
                        let wt = (-((dx * dx + dy * dy) as f64) / 4.5 - d2 / (2.0 * rs * rs)).exp();
                        den += wt;
                        (0..3).for_each(|i| num[i] += wt * p[i] as f64);
                    }
                }
                for i in 0..3 {
                    let want = num[i] / den;
                    let got = out.get_pixel(x as u32, y as u32)[i] as f64;
                    assert!((got - want).abs() <= 0.5 + 1e-3, "({x},{y},{i}): {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn constant_image_is_unchanged() {
        let img = RgbImage::from_pixel(20, 15, Rgb([90, 120, 200]));
        assert_eq!(bilateral_smooth(&img, 3.0, 25.0 / 255.0), img);
    }

    #[test]
    fn salt_pixel_is_attenuated_as_the_kernel_predicts() {
        // 11x11 field of 100 with a single 130 pixel in the middle
        let mut p = Plane::new(11, 11);
        p.data.iter_mut().for_each(|v| *v = 100.0);
        p.data[5 * 11 + 5] = 130.0;
        let (ss, rs) = (1.5f32, 25.0f32);
        let out = bilateral_smooth_gray(&p, ss, rs / 255.0);
        // direct evaluation: radius ceil(2*1.5) = 3
        let (mut num, mut den) = (0f64, 0f64);
        for dy in -3i32..=3 {
            for dx in -3i32..=3 {
                let v = if dx == 0 && dy == 0 { 130.0 } else { 100.0 };
                let ws = (-((dx * dx + dy * dy) as f64) / (2.0 * 1.5 * 1.5)).exp();
                let wr = (-((v - 130.0f64).powi(2)) / (2.0 * 25.0 * 25.0)).exp();
                num += ws * wr * v;
                den += ws * wr;
            }
        }
        let expected = num / den;
        let got = out.get(5, 5) as f64;
        assert!((got - expected).abs() < 1e-3, "{got} vs {expected}");
        assert!(got < 130.0 && got > 100.0);
    }

    #[test]
    fn step_edge_location_is_preserved() {
        let mut p = Plane::new(40, 1);
        for x in 0..40 {
            p.data[x] = if x < 20 { 30.0 } else { 220.0 };
        }
        let out = bilateral_smooth_gray(&p, 3.0, 25.0 / 255.0);
        let grad: Vec<f32> = (0..39).map(|x| (out.get(x + 1, 0) - out.get(x, 0)).abs()).collect();
        let argmax = grad
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 19);
    }

    #[test]
    fn rotate_crop_quarter_turn() {
        // a single dark pixel below the centre moves to the right after a
        // counter-clockwise quarter turn
        let mut img = RgbImage::from_pixel(5, 5, Rgb([255, 255, 255]));
        img.put_pixel(2, 3, Rgb([0, 0, 0]));
        let r = rotate_crop(&img, (2.0, 2.0), 90.0, 5, [255, 255, 255]);
        assert_eq!(r.get_pixel(3, 2)[0], 0);
        assert_eq!(r.get_pixel(2, 3)[0], 255);
    }
}

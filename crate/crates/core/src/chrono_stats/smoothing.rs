use super::{ChronoError, Result};

/// Truncated discrete Gaussian on `[−radius, radius]`, summing to 1.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let w: Vec<f64> = (-(radius as i64)..=radius as i64)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Half-sample symmetric reflection (`d c b a | a b c d | d c b a`).
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

fn check(sigma: f64, radius: usize) -> Result<()> {
    if !(sigma > 0.0) || radius == 0 {
        return Err(ChronoError::InvalidParam("sigma > 0 and radius ≥ 1 required".into()));
    }
    Ok(())
}

/// Gaussian filter with reflective boundaries.
pub fn gaussian_smooth(series: &[f64], sigma: f64, radius: usize) -> Result<Vec<f64>> {
    check(sigma, radius)?;
    if series.is_empty() {
        return Ok(Vec::new());
    }
    let k = gaussian_kernel(sigma, radius);
    let r = radius as i64;
    Ok((0..series.len() as i64)
        .map(|t| {
            k.iter()
                .enumerate()
                .map(|(x, w)| w * series[reflect(t + x as i64 - r, series.len())])
                .sum()
        })
        .collect())
}

/// Gaussian filter over a series with gaps: weights are renormalized over
/// the present neighbours and missing points stay missing.
pub fn gaussian_smooth_masked(series: &[Option<f64>], sigma: f64, radius: usize) -> Result<Vec<Option<f64>>> {
    check(sigma, radius)?;
    let k = gaussian_kernel(sigma, radius);
    let r = radius as i64;
    let n = series.len();
    Ok((0..n as i64)
        .map(|t| {
            series[t as usize]?;
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (x, w) in k.iter().enumerate() {
                if let Some(v) = series[reflect(t + x as i64 - r, n)] {
                    acc += w * v;
                    wsum += w;
                }
            }
            Some(acc / wsum)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_and_impulse() {
        let c = gaussian_smooth(&[3.0; 20], 2.5, 5).unwrap();
        assert!(c.iter().all(|v| (v - 3.0).abs() < 1e-12));
        let mut imp = vec![0.0; 21];
        imp[10] = 1.0;
        let s = gaussian_smooth(&imp, 2.5, 5).unwrap();
        let k = gaussian_kernel(2.5, 5);
        for (x, w) in k.iter().enumerate() {
            assert!((s[5 + x] - w).abs() < 1e-15);
        }
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_interior_is_fixed() {
        let ramp: Vec<f64> = (0..30).map(|i| 0.5 * i as f64 - 2.0).collect();
        let s = gaussian_smooth(&ramp, 2.5, 5).unwrap();
        for t in 5..25 {
            assert!((s[t] - ramp[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn reflection_indices() {
        let idx: Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(idx, vec![2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
        // radius longer than the series
        assert!(gaussian_smooth(&[1.0, 1.0], 3.0, 9).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(gaussian_smooth(&[1.0], 1.0, 0).is_err());
    }

    #[test]
    fn masked_keeps_gaps() {
        let s = gaussian_smooth_masked(&[Some(1.0), None, Some(1.0), Some(1.0)], 2.5, 5).unwrap();
        assert_eq!(s[1], None);
        assert!(s.iter().flatten().all(|v| (v - 1.0).abs() < 1e-12));
        let full: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let a = gaussian_smooth(&full, 1.5, 3).unwrap();
        let b = gaussian_smooth_masked(&full.iter().map(|&v| Some(v)).collect::<Vec<_>>(), 1.5, 3).unwrap();
        for (x, y) in a.iter().zip(b) {
            assert!((x - y.unwrap()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn output_within_input_range(xs in prop::collection::vec(-100.0f64..100.0, 1..60), sigma in 0.3f64..5.0, radius in 1usize..8) {
            let s = gaussian_smooth(&xs, sigma, radius).unwrap();
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(s.len(), xs.len());
            for v in s {
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use super::{ChronoError, Result};
use crate::stats::{median, normal_sf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannKendall {
    pub n: usize,
    pub s: i64,
    /// Tie-corrected variance of `S`.
    pub var_s: f64,
    /// `S / (n(n−1)/2)`.
    pub tau: f64,
    /// Continuity-corrected normal score.
    pub z: f64,
    /// Two-sided.
    pub p: f64,
    /// Theil–Sen slope per step.
    pub sen_slope: f64,
}

/// Mann–Kendall trend test with Theil–Sen slope.
pub fn mann_kendall(series: &[f64]) -> Result<MannKendall> {
    let n = series.len();
    if n < 4 {
        return Err(ChronoError::TooShort { needed: 4, got: n });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(ChronoError::InvalidParam("non-finite value".into()));
    }
    let mut s = 0i64;
    let mut slopes = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = series[j] - series[i];
            s += (d > 0.0) as i64 - (d < 0.0) as i64;
            slopes.push(d / (j - i) as f64);
        }
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let t = j as f64;
        ties += t * (t - 1.0) * (2.0 * t + 5.0);
        i += j;
    }
    let nf = n as f64;
    let var_s = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - ties) / 18.0;
    if var_s <= 0.0 {
        return Err(ChronoError::AllTies);
    }
    let z = (s - s.signum()) as f64 / var_s.sqrt();
    Ok(MannKendall {
        n,
        s,
        var_s,
        tau: s as f64 / (nf * (nf - 1.0) / 2.0),
        z,
        p: (2.0 * normal_sf(z.abs())).min(1.0),
        sen_slope: median(&slopes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn increasing_ten() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let m = mann_kendall(&x).unwrap();
        assert_eq!(m.s, 45);
        assert_eq!(m.var_s, 125.0);
        assert!(m.p < 0.001);
        assert!((m.sen_slope - 0.3).abs() < 1e-12);
        assert_eq!(m.tau, 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(mann_kendall(&[2.0; 8]), Err(ChronoError::AllTies));
        assert_eq!(mann_kendall(&[1.0, 2.0, 3.0]), Err(ChronoError::TooShort { needed: 4, got: 3 }));
    }

    #[test]
    fn tie_correction() {
        // groups of sizes 2 and 3: Σ t(t−1)(2t+5) = 18 + 66
        let m = mann_kendall(&[1.0, 1.0, 2.0, 2.0, 2.0, 3.0]).unwrap();
        assert!((m.var_s - (6.0 * 5.0 * 17.0 - 84.0) / 18.0).abs() < 1e-12);
        assert_eq!(m.s, 11);
    }

    proptest! {
        #[test]
        fn reversal_negates(xs in prop::collection::vec(-50i32..50, 4..40)) {
            let x: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
            prop_assume!(x.iter().any(|&v| v != x[0]));
            let mut r = x.clone();
            r.reverse();
            let (a, b) = (mann_kendall(&x).unwrap(), mann_kendall(&r).unwrap());
            prop_assert_eq!(a.s, -b.s);
            prop_assert!((a.p - b.p).abs() < 1e-15);
            prop_assert!((a.sen_slope + b.sen_slope).abs() < 1e-12);
        }
    }
}

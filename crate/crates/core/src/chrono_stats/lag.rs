use serde::{Deserialize, Serialize};

use super::{ChronoError, Result};
use crate::stats::pearson;

/// Minimum overlapping points per offset.
pub const MIN_OVERLAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagPoint {
    /// Positive: `a` leads `b` by `tau` steps.
    pub tau: i64,
    pub r: f64,
    /// Fisher-z 95% interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
}

/// `r(τ) = corr(a[t], b[t + τ])` for `τ ∈ [−max_offset, max_offset]`.
/// `r` is NaN where either window is constant.
pub fn lagged_correlation(a: &[f64], b: &[f64], max_offset: usize) -> Result<Vec<LagPoint>> {
    if a.len() != b.len() {
        return Err(ChronoError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let len = a.len() as i64;
    let m = max_offset as i64;
    (-m..=m)
        .map(|tau| {
            let n = len - tau.abs();
            if n < MIN_OVERLAP as i64 {
                return Err(ChronoError::InsufficientOverlap(tau));
            }
            let n = n as usize;
            let (xa, xb) = if tau >= 0 {
                (&a[..n], &b[tau as usize..])
            } else {
                (&a[(-tau) as usize..], &b[..n])
            };
            let r = pearson(xa, xb).unwrap_or(f64::NAN);
            let z = r.atanh();
            let h = 1.959963984540054 / ((n - 3) as f64).sqrt();
            Ok(LagPoint {
                tau,
                r,
                ci_lo: (z - h).tanh(),
                ci_hi: (z + h).tanh(),
                n,
            })
        })
        .collect()
}

/// Local maxima of `r(τ)` whose lower bound exceeds the upper bound of the
/// deepest trough separating them from the previous retained peak.
pub fn lag_peaks(curve: &[LagPoint]) -> Vec<usize> {
    let mut peaks: Vec<usize> = Vec::new();
    for i in 0..curve.len() {
        let r = curve[i].r;
        if !r.is_finite() {
            continue;
        }
        let left = i == 0 || curve[i - 1].r.is_nan() || curve[i - 1].r < r;
        let right = i + 1 == curve.len() || curve[i + 1].r.is_nan() || curve[i + 1].r <= r;
        if !(left && right) {
            continue;
        }
        if let Some(&p) = peaks.last() {
            let trough = (p..=i)
                .filter(|&k| curve[k].r.is_finite())
                .min_by(|&x, &y| curve[x].r.total_cmp(&curve[y].r))
                .unwrap();
            let separated = |k: usize| curve[k].ci_lo > curve[trough].ci_hi;
            if !(separated(p) && separated(i)) {
                if r > curve[p].r {
                    *peaks.last_mut().unwrap() = i;
                }
                continue;
            }
        }
        peaks.push(i);
    }
    peaks
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::smoothing::gaussian_smooth_masked;
use super::Result;
use crate::model::MapRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomesticSeries {
    pub years: Vec<i32>,
    /// Records with a domestic flag per year.
    pub n: Vec<usize>,
    /// Windowed share, missing where the year has no record.
    pub share: Vec<Option<f64>>,
    pub smoothed: Vec<Option<f64>>,
    /// 95% Wilson interval on the pooled window counts.
    pub ci: Vec<Option<(f64, f64)>>,
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (nf, p) = (n as f64, k as f64 / n as f64);
    let z2 = z * z;
    let den = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / den;
    let half = z / den * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Yearly share of domestic maps, averaged over a centered `window`
/// of years and Gaussian-smoothed across gaps.
pub fn domestic_share_series(records: &[MapRecord], window: usize, sigma: f64, radius: usize) -> Result<DomesticSeries> {
    let mut per_year: BTreeMap<i32, (usize, usize)> = BTreeMap::new();
    for r in records {
        if let Some(d) = r.domestic {
            let e = per_year.entry(r.year).or_insert((0, 0));
            e.0 += usize::from(d);
            e.1 += 1;
        }
    }
    let (Some(&y0), Some(&y1)) = (per_year.keys().next(), per_year.keys().next_back()) else {
        return Ok(DomesticSeries {
            years: vec![],
            n: vec![],
            share: vec![],
            smoothed: vec![],
            ci: vec![],
        });
    };
    let years: Vec<i32> = (y0..=y1).collect();
    let counts: Vec<(usize, usize)> = years.iter().map(|y| per_year.get(y).copied().unwrap_or((0, 0))).collect();
    let half = (window.max(1) - 1) / 2;
    let mut share = Vec::with_capacity(years.len());
    let mut ci = Vec::with_capacity(years.len());
    for t in 0..years.len() {
        if counts[t].1 == 0 {
            share.push(None);
            ci.push(None);
            continue;
        }
        let span = &counts[t.saturating_sub(half)..(t + half + 1).min(years.len())];
        let yearly: Vec<f64> = span.iter().filter(|c| c.1 > 0).map(|c| c.0 as f64 / c.1 as f64).collect();
        share.push(Some(yearly.iter().sum::<f64>() / yearly.len() as f64));
        let (k, n) = span.iter().fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
        ci.push(Some(wilson_interval(k, n, 1.959963984540054)));
    }
    let smoothed = gaussian_smooth_masked(&share, sigma, radius)?;
    Ok(DomesticSeries {
        years,
        n: counts.iter().map(|c| c.1).collect(),
        share,
        smoothed,
        ci,
    })
}

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{CompositionError, Result};
use crate::rng::stream_rng;
use crate::stats::{mean, percentile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionDirection {
    /// `log10(1/S) = β0 + β1·log2(W)`.
    ScaleFromWidth,
    /// `log2(W) = β0 + β1·log10(1/S)`.
    WidthFromScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoadWidthParams {
    pub direction: RegressionDirection,
    pub n_splits: usize,
    pub test_frac: f64,
    pub n_permutations: usize,
    pub seed: u64,
}

impl Default for RoadWidthParams {
    fn default() -> Self {
        Self {
            direction: RegressionDirection::ScaleFromWidth,
            n_splits: 100,
            test_frac: 0.2,
            n_permutations: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadWidthReport {
    pub direction: RegressionDirection,
    pub n: usize,
    /// Fit on all samples.
    pub beta0: f64,
    pub beta1: f64,
    pub r2: f64,
    /// Held-out MAE, mean and 2.5/97.5 percentiles over splits.
    pub mae: f64,
    pub mae_ci: (f64, f64),
    /// Held-out MAE of fits on permuted targets.
    pub chance_mae: f64,
    pub chance_ci: (f64, f64),
    /// `1 − base^mae / base^chance`, base 10 for scale, 2 for width.
    pub explained_share: f64,
    /// Share of permutations at least as good as the model (add-one).
    pub p_value: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b1 = sxy / sxx;
    Some((my - b1 * mx, b1))
}

fn mae(b: (f64, f64), x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, t)| (t - b.0 - b.1 * a).abs()).sum::<f64>() / x.len() as f64
}

/// Log–log regression between map scale denominators `S` and road widths
/// `W` (pixels), evaluated on repeated random train/test splits against a
/// permuted-target baseline.
pub fn roadwidth_regression(samples: &[(f64, f64)], params: &RoadWidthParams) -> Result<RoadWidthReport> {
    if samples.iter().any(|&(s, w)| !(s > 0.0 && w > 0.0)) {
        return Err(CompositionError::InvalidParam("S and W must be positive".into()));
    }
    let n = samples.len();
    let n_test = ((n as f64 * params.test_frac).round() as usize).max(1);
    if n < n_test + 3 || params.n_splits == 0 || params.n_permutations == 0 {
        return Err(CompositionError::TooFewSamples { needed: n_test + 3, got: n });
    }
    let psi: Vec<f64> = samples.iter().map(|&(s, _)| -s.log10()).collect();
    let omega: Vec<f64> = samples.iter().map(|&(_, w)| w.log2()).collect();
    let (x, y, base) = match params.direction {
        RegressionDirection::ScaleFromWidth => (omega, psi, 10f64),
        RegressionDirection::WidthFromScale => (psi, omega, 2f64),
    };
    let full = ols(&x, &y).ok_or(CompositionError::DegenerateVariance("predictor"))?;
    let my = mean(&y);
    let sst: f64 = y.iter().map(|t| (t - my).powi(2)).sum();
    let sse: f64 = x.iter().zip(&y).map(|(a, t)| (t - full.0 - full.1 * a).powi(2)).sum();
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };

    let split = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let (test, train) = idx.split_at(n_test);
        (train.to_vec(), test.to_vec())
    };
    let pick = |v: &[f64], idx: &[usize]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let mut maes = Vec::with_capacity(params.n_splits);
    for s in 0..params.n_splits {
        let (train, test) = split(&mut stream_rng(params.seed, s as u64));
        let b = ols(&pick(&x, &train), &pick(&y, &train)).unwrap_or((mean(&pick(&y, &train)), 0.0));
        maes.push(mae(b, &pick(&x, &test), &pick(&y, &test)));
    }
    let mut chance = Vec::with_capacity(params.n_permutations);
    for s in 0..params.n_permutations {
        let mut rng = stream_rng(params.seed, (params.n_splits + s) as u64);
        let (train, test) = split(&mut rng);
        let mut yt = pick(&y, &train);
        yt.shuffle(&mut rng);
        let b = ols(&pick(&x, &train), &yt).unwrap_or((mean(&yt), 0.0));
        chance.push(mae(b, &pick(&x, &test), &pick(&y, &test)));
    }
    let (m, c) = (mean(&maes), mean(&chance));
    let better = chance.iter().filter(|&&v| v <= m).count();
    Ok(RoadWidthReport {
        direction: params.direction,
        n,
        beta0: full.0,
        beta1: full.1,
        r2,
        mae: m,
        mae_ci: (percentile(&maes, 2.5), percentile(&maes, 97.5)),
        chance_mae: c,
        chance_ci: (percentile(&chance, 2.5), percentile(&chance, 97.5)),
        explained_share: 1.0 - base.powf(m) / base.powf(c),
        p_value: (1 + better) as f64 / (1 + chance.len()) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;

    fn noisy(n: usize, slope: f64, noise: f64, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = rng_from(seed);
        (0..n)
            .map(|_| {
                let omega: f64 = rng.random_range(0.0..4.0);
                let psi = -3.0 + slope * omega + noise * rng.random_range(-1.0..1.0);
                (10f64.powf(-psi), 2f64.powf(omega))
            })
            .collect()
    }

    #[test]
    fn exact_line() {
        let s = noisy(200, 0.7, 0.0, 1);
        let r = roadwidth_regression(&s, &RoadWidthParams::default()).unwrap();
        assert!((r.beta1 - 0.7).abs() < 1e-8);
        assert!((r.beta0 + 3.0).abs() < 1e-8);
        assert!(r.mae < 1e-8);
        assert!(r.p_value < 0.01);
    }

    #[test]
    fn both_directions_share_r2() {
        let s = noisy(300, 0.5, 0.6, 2);
        let a = roadwidth_regression(&s, &RoadWidthParams::default()).unwrap();
        let b = roadwidth_regression(
            &s,
            &RoadWidthParams {
                direction: RegressionDirection::WidthFromScale,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((a.r2 - b.r2).abs() < 1e-12);
        assert!((a.beta1 * b.beta1 - a.r2).abs() < 1e-12);
    }

    #[test]
    fn independent_width_is_chance() {
        let s = noisy(400, 0.0, 1.0, 3);
        let r = roadwidth_regression(&s, &RoadWidthParams::default()).unwrap();
        assert!(r.mae >= r.chance_ci.0 - 0.02 && r.mae <= r.chance_ci.1 + 0.02, "{r:?}");
        assert!(r.p_value > 0.01);
    }

    #[test]
    fn degenerate_predictor() {
        let s: Vec<(f64, f64)> = (0..20).map(|i| (1000.0 + i as f64, 4.0)).collect();
        assert_eq!(
            roadwidth_regression(&s, &RoadWidthParams::default()),
            Err(CompositionError::DegenerateVariance("predictor"))
        );
    }
}

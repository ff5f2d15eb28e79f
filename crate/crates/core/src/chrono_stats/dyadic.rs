use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ChronoError, Result};
use crate::stats::{average_ranks, f_sf, student_t_sf};

/// Average ranks scaled to `[0, 1]` by `n − 1`; a single value maps to 0.5.
pub fn rank_transform(column: &[f64]) -> Vec<f64> {
    match column.len() {
        0 => vec![],
        1 => vec![0.5],
        n => average_ranks(column).into_iter().map(|r| (r - 1.0) / (n - 1) as f64).collect(),
    }
}

/// Min–max scaling to `[0, 1]`; constant columns map to 0.5.
pub fn min_max_normalize(column: &[f64]) -> Vec<f64> {
    let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    column
        .iter()
        .map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
        .collect()
}

/// Observations on unordered entity pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicDesign {
    pub pairs: Vec<(usize, usize)>,
    pub predictors: Vec<(String, Vec<f64>)>,
    pub response: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DyadicOptions {
    /// Dummy-coded effects for the first and second member of each pair.
    pub fixed_effects: bool,
    /// Two-way cluster-robust variance clustered on both members.
    pub cluster_robust: bool,
    /// Drop the least significant predictor while its p is at or above this.
    pub backward_alpha: Option<f64>,
}

impl Default for DyadicOptions {
    fn default() -> Self {
        Self {
            fixed_effects: true,
            cluster_robust: true,
            backward_alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub beta: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    /// Type-II sum of squares and its F test.
    pub ss: f64,
    pub f: f64,
    pub p_ss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicReport {
    pub n: usize,
    /// Columns including intercept and dummies.
    pub columns: usize,
    pub df_resid: usize,
    /// Degrees of freedom of the coefficient t tests.
    pub df_t: f64,
    pub clusters: (usize, usize),
    pub intercept: f64,
    pub coefficients: Vec<Coefficient>,
    pub residual_ss: f64,
    pub r2: f64,
    /// Negative eigenvalues of the two-way variance were set to zero.
    pub clamped: bool,
    /// Predictors removed by backward elimination, in order.
    pub dropped: Vec<String>,
}

struct Fit {
    beta: DVector<f64>,
    resid: DVector<f64>,
    rss: f64,
    xtx_inv: DMatrix<f64>,
}

fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Fit> {
    let cols = x.ncols();
    let svd = x.clone().svd(false, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-10 * x.nrows().max(cols) as f64;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < cols || x.nrows() <= cols {
        return Err(ChronoError::RankDeficient { rank, cols });
    }
    let v_t = svd.v_t.expect("requested");
    let inv_s2 = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / (s * s)));
    let xtx_inv = v_t.transpose() * inv_s2 * &v_t;
    let beta = &xtx_inv * (x.transpose() * y);
    let resid = y - x * &beta;
    Ok(Fit {
        rss: resid.norm_squared(),
        beta,
        resid,
        xtx_inv,
    })
}

fn cluster_meat<K: Ord>(x: &DMatrix<f64>, e: &DVector<f64>, key: impl Fn(usize) -> K) -> (DMatrix<f64>, usize) {
    let mut scores: BTreeMap<K, DVector<f64>> = BTreeMap::new();
    for r in 0..x.nrows() {
        let s = scores.entry(key(r)).or_insert_with(|| DVector::zeros(x.ncols()));
        *s += x.row(r).transpose() * e[r];
    }
    let mut m = DMatrix::zeros(x.ncols(), x.ncols());
    for s in scores.values() {
        m += s * s.transpose();
    }
    (m, scores.len())
}

fn without_column(x: &DMatrix<f64>, c: usize) -> DMatrix<f64> {
    x.clone().remove_column(c)
}

fn validate(d: &DyadicDesign) -> Result<()> {
    let n = d.response.len();
    if d.pairs.len() != n {
        return Err(ChronoError::DimensionMismatch { expected: n, got: d.pairs.len() });
    }
    let mut seen = BTreeSet::new();
    for &(i, j) in &d.pairs {
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(ChronoError::InvalidParam(format!("pair ({i}, {j}) is duplicated")));
        }
    }
    let mut names = BTreeSet::new();
    for (name, col) in &d.predictors {
        if col.len() != n {
            return Err(ChronoError::DimensionMismatch { expected: n, got: col.len() });
        }
        if !names.insert(name) {
            return Err(ChronoError::InvalidParam(format!("predictor `{name}` is repeated")));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(ChronoError::InvalidParam(format!("predictor `{name}` has non-finite values")));
        }
    }
    if d.response.iter().any(|v| !v.is_finite()) {
        return Err(ChronoError::InvalidParam("response has non-finite values".into()));
    }
    Ok(())
}

fn dummies(ids: impl Iterator<Item = usize>, n: usize) -> Vec<Vec<f64>> {
    let ids: Vec<usize> = ids.collect();
    let levels: BTreeSet<usize> = ids.iter().copied().collect();
    // first level is the reference
    levels
        .into_iter()
        .skip(1)
        .map(|l| (0..n).map(|r| f64::from(ids[r] == l)).collect())
        .collect()
}

fn fit_once(d: &DyadicDesign, active: &[usize], opts: &DyadicOptions) -> Result<DyadicReport> {
    let n = d.response.len();
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    cols.extend(active.iter().map(|&p| d.predictors[p].1.clone()));
    if opts.fixed_effects {
        cols.extend(dummies(d.pairs.iter().map(|p| p.0), n));
        cols.extend(dummies(d.pairs.iter().map(|p| p.1), n));
    }
    let k = cols.len();
    let x = DMatrix::from_fn(n, k, |r, c| cols[c][r]);
    let y = DVector::from_column_slice(&d.response);
    let fit = least_squares(&x, &y)?;
    let df_resid = n - k;
    let sigma2 = fit.rss / df_resid as f64;

    let mut clamped = false;
    let (var, df_t, clusters) = if opts.cluster_robust {
        let (mi, gi) = cluster_meat(&x, &fit.resid, |r| d.pairs[r].0);
        let (mj, gj) = cluster_meat(&x, &fit.resid, |r| d.pairs[r].1);
        let (mij, _) = cluster_meat(&x, &fit.resid, |r| d.pairs[r]);
        let b = &fit.xtx_inv;
        let v = b * (mi + mj - mij) * b;
        let v = (&v + v.transpose()) * 0.5;
        let eig = v.clone().symmetric_eigen();
        let v = if eig.eigenvalues.iter().any(|&l| l < 0.0) {
            clamped = true;
            log::warn!("two-way cluster variance is not positive semi-definite; clamping eigenvalues at zero");
            let l = eig.eigenvalues.map(|l| l.max(0.0));
            &eig.eigenvectors * DMatrix::from_diagonal(&l) * eig.eigenvectors.transpose()
        } else {
            v
        };
        (v, (gi.min(gj) as f64 - 1.0).max(1.0), (gi, gj))
    } else {
        (&fit.xtx_inv * sigma2, df_resid as f64, (0, 0))
    };

    let mut coefficients = Vec::with_capacity(active.len());
    for (slot, &p) in active.iter().enumerate() {
        let c = slot + 1;
        let beta = fit.beta[c];
        let se = var[(c, c)].max(0.0).sqrt();
        let t = beta / se;
        let reduced = least_squares(&without_column(&x, c), &y)?;
        let ss = (reduced.rss - fit.rss).max(0.0);
        let f = ss / sigma2;
        coefficients.push(Coefficient {
            name: d.predictors[p].0.clone(),
            beta,
            se,
            t,
            p: if se > 0.0 { (2.0 * student_t_sf(t.abs(), df_t)).min(1.0) } else { f64::NAN },
            ss,
            f,
            p_ss: f_sf(f, 1.0, df_resid as f64),
        });
    }
    let my = d.response.iter().sum::<f64>() / n as f64;
    let tss: f64 = d.response.iter().map(|v| (v - my).powi(2)).sum();
    Ok(DyadicReport {
        n,
        columns: k,
        df_resid,
        df_t,
        clusters,
        intercept: fit.beta[0],
        coefficients,
        residual_ss: fit.rss,
        r2: if tss > 0.0 { 1.0 - fit.rss / tss } else { f64::NAN },
        clamped,
        dropped: vec![],
    })
}

/// OLS on dyads with optional two-way fixed effects and two-way
/// cluster-robust (Cameron–Gelbach–Miller) variance.
pub fn dyadic_regression(design: &DyadicDesign, opts: &DyadicOptions) -> Result<DyadicReport> {
    validate(design)?;
    let mut active: Vec<usize> = (0..design.predictors.len()).collect();
    let mut dropped = Vec::new();
    loop {
        let mut report = fit_once(design, &active, opts)?;
        let worst = report
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.p.is_nan())
            .max_by(|a, b| a.1.p.total_cmp(&b.1.p));
        match (opts.backward_alpha, worst) {
            (Some(alpha), Some((slot, c))) if c.p >= alpha => {
                log::debug!("dropping `{}` (p = {:.4})", c.name, c.p);
                dropped.push(c.name.clone());
                active.remove(slot);
            }
            _ => {
                report.dropped = dropped;
                return Ok(report);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn lower_triangle(m: usize) -> Vec<(usize, usize)> {
        (0..m).flat_map(|i| (0..i).map(move |j| (i, j))).collect()
    }

    #[test]
    fn ranks() {
        assert_eq!(rank_transform(&[3.0, 1.0, 2.0]), vec![1.0, 0.0, 0.5]);
        assert_eq!(rank_transform(&[4.0; 5]), vec![0.5; 5]);
        assert_eq!(rank_transform(&[7.0]), vec![0.5]);
        assert_eq!(min_max_normalize(&[2.0, 4.0, 3.0]), vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn exact_slope() {
        let mut rng = rng_from(1);
        let pairs = lower_triangle(12);
        let x: Vec<f64> = pairs.iter().map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1e-12 * rng.random::<f64>()).collect();
        let d = DyadicDesign {
            pairs,
            predictors: vec![("x".into(), x)],
            response: y,
        };
        let r = dyadic_regression(&d, &DyadicOptions::default()).unwrap();
        assert!((r.coefficients[0].beta - 2.0).abs() < 1e-8);
    }

    #[test]
    fn singleton_clusters_reduce_to_hc0() {
        let mut rng = rng_from(2);
        let n = 60;
        let pairs: Vec<(usize, usize)> = (0..n).map(|k| (k, 1000 + k)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 0.5 * v + (0.2 + v) * { let g: f64 = StandardNormal.sample(&mut rng); g }).collect();
        let d = DyadicDesign {
            pairs,
            predictors: vec![("x".into(), x.clone())],
            response: y.clone(),
        };
        let opts = DyadicOptions {
            fixed_effects: false,
            ..Default::default()
        };
        let r = dyadic_regression(&d, &opts).unwrap();
        // closed-form HC0 for a single regressor with intercept
        let nf = n as f64;
        let mx = x.iter().sum::<f64>() / nf;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let b1 = r.coefficients[0].beta;
        let b0 = r.intercept;
        let meat: f64 = x.iter().zip(&y).map(|(a, t)| ((a - mx) * (t - b0 - b1 * a)).powi(2)).sum();
        let hc0 = (meat / (sxx * sxx)).sqrt();
        assert!((r.coefficients[0].se - hc0).abs() < 1e-8, "{} {hc0}", r.coefficients[0].se);
        assert!(!r.clamped);
    }

    #[test]
    fn collinear_with_fixed_effect() {
        let pairs = lower_triangle(8);
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0 == 5)).collect();
        let y: Vec<f64> = (0..pairs.len()).map(|i| i as f64).collect();
        let d = DyadicDesign {
            pairs,
            predictors: vec![("x".into(), x)],
            response: y,
        };
        assert!(matches!(
            dyadic_regression(&d, &DyadicOptions::default()),
            Err(ChronoError::RankDeficient { .. })
        ));
    }

    #[test]
    fn fixed_effects_recover_slope_and_affine_response() {
        let mut rng = rng_from(3);
        let m = 25;
        let alpha: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let pairs = lower_triangle(m);
        let x: Vec<f64> = pairs.iter().map(|_| rng.random::<f64>()).collect();
        let z: Vec<f64> = pairs.iter().map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = pairs
            .iter()
            .zip(&x)
            .map(|(&(i, j), v)| 0.8 * v + alpha[i] + alpha[j] + 0.05 * { let g: f64 = StandardNormal.sample(&mut rng); g })
            .collect();
        let d = DyadicDesign {
            pairs: pairs.clone(),
            predictors: vec![("x".into(), x.clone()), ("z".into(), z.clone())],
            response: y.clone(),
        };
        let r = dyadic_regression(&d, &DyadicOptions::default()).unwrap();
        assert!((r.coefficients[0].beta - 0.8).abs() < 0.03);
        assert!(r.coefficients[0].p < 1e-6);
        let scaled = DyadicDesign {
            response: y.iter().map(|v| -3.0 * v + 7.0).collect(),
            ..d.clone()
        };
        let s = dyadic_regression(&scaled, &DyadicOptions::default()).unwrap();
        for (a, b) in r.coefficients.iter().zip(&s.coefficients) {
            assert!((b.beta + 3.0 * a.beta).abs() < 1e-9);
            assert!((b.se - 3.0 * a.se).abs() < 1e-9);
            assert!((b.p - a.p).abs() < 1e-9);
        }
        let back = dyadic_regression(
            &d,
            &DyadicOptions {
                backward_alpha: Some(0.025),
                ..Default::default()
            },
        )
        .unwrap();
        if r.coefficients[1].p >= 0.025 {
            assert_eq!(back.dropped, vec!["z".to_string()]);
            assert_eq!(back.coefficients.len(), 1);
        }
        assert!(back.coefficients.iter().all(|c| c.p < 0.025));
    }

    #[test]
    fn type_ii_ss_matches_refit() {
        let mut rng = rng_from(4);
        let pairs = lower_triangle(10);
        let x: Vec<f64> = pairs.iter().map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 0.3 * rng.random::<f64>()).collect();
        let opts = DyadicOptions {
            fixed_effects: false,
            cluster_robust: false,
            backward_alpha: None,
        };
        let d = DyadicDesign {
            pairs,
            predictors: vec![("x".into(), x.clone())],
            response: y.clone(),
        };
        let r = dyadic_regression(&d, &opts).unwrap();
        let my = y.iter().sum::<f64>() / y.len() as f64;
        let tss: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
        assert!((r.coefficients[0].ss - (tss - r.residual_ss)).abs() < 1e-9);
        // with one regressor, F = t²
        assert!((r.coefficients[0].f - r.coefficients[0].t.powi(2)).abs() < 1e-6);
    }

    #[test]
    fn rejects_duplicate_pairs() {
        let d = DyadicDesign {
            pairs: vec![(1, 0), (0, 1)],
            predictors: vec![],
            response: vec![1.0, 2.0],
        };
        assert!(matches!(dyadic_regression(&d, &DyadicOptions::default()), Err(ChronoError::InvalidParam(_))));
    }
}

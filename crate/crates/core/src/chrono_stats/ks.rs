use super::{ChronoError, Result};

/// Two-sample Kolmogorov–Smirnov statistic `sup |F − G|`.
pub fn ks_statistic(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.is_empty() || g.is_empty() {
        return Err(ChronoError::EmptySample);
    }
    let sort = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    };
    let (a, b) = (sort(f), sort(g));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// KS-type statistic on two cumulative-sum paths over the same support:
/// each path is cumulated and scaled to end at 1.
pub fn ks_cumsum(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(ChronoError::DimensionMismatch {
            expected: f.len(),
            got: g.len(),
        });
    }
    let (tf, tg): (f64, f64) = (f.iter().sum(), g.iter().sum());
    if f.is_empty() || !(tf > 0.0) || !(tg > 0.0) || f.iter().chain(g).any(|&v| v < 0.0) {
        return Err(ChronoError::EmptySample);
    }
    let (mut cf, mut cg, mut d) = (0.0, 0.0, 0.0f64);
    for (x, y) in f.iter().zip(g) {
        cf += x;
        cg += y;
        d = d.max((cf / tf - cg / tg).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(f: &[f64], g: &[f64]) -> f64 {
        let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        f.iter().chain(g).map(|&x| (ecdf(f, x) - ecdf(g, x)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[], &[1.0]), Err(ChronoError::EmptySample));
        assert_eq!(ks_cumsum(&[1.0, 0.0], &[0.0, 5.0]).unwrap(), 1.0);
        assert_eq!(ks_cumsum(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 0.0);
        assert!((ks_cumsum(&[1.0, 1.0], &[3.0, 1.0]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(ks_cumsum(&[0.0], &[1.0]), Err(ChronoError::EmptySample));
    }

    proptest! {
        #[test]
        fn matches_brute_force(f in prop::collection::vec(-20i32..20, 1..40), g in prop::collection::vec(-20i32..20, 1..40)) {
            let f: Vec<f64> = f.iter().map(|&v| v as f64 / 2.0).collect();
            let g: Vec<f64> = g.iter().map(|&v| v as f64 / 2.0).collect();
            prop_assert!((ks_statistic(&f, &g).unwrap() - brute(&f, &g)).abs() < 1e-12);
        }
    }
}

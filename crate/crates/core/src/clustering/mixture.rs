use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ClusteringError;
use crate::vectors::{sq_dist, Vectors};

/// Mixture of spherical Gaussians sharing one variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centers: Vectors,
    pub weights: Vec<f64>,
    /// Per-coordinate variance shared by all components.
    pub variance: f64,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centers.len()
    }
}

/// Within-cluster variance per coordinate, pooled over clusters:
/// `Σ‖x − c(x)‖² / (n·dim)`.
pub fn pooled_variance(v: &Vectors, labels: &[usize], centers: &Vectors) -> f64 {
    let ss: f64 = v.rows().zip(labels).map(|(x, &l)| sq_dist(x, centers.row(l))).sum();
    ss / (v.len() * v.dim()) as f64
}

/// Density-aware reclustering: each cluster is upsampled to
/// `max(1, round(total · size / Σ size))` samples and the mixture weights
/// follow those counts. Centers are kept as given.
pub fn density_recluster(
    centers: &Vectors,
    sizes: &[usize],
    total_points: usize,
    variance: f64,
) -> Result<ClusterModel, ClusteringError> {
    let k = centers.len();
    if k == 0 {
        return Err(ClusteringError::EmptyInput);
    }
    if sizes.len() != k {
        return Err(ClusteringError::DimMismatch {
            expected: k,
            got: sizes.len(),
        });
    }
    if total_points < k {
        return Err(ClusteringError::InvalidParam(format!(
            "total_points {total_points} below cluster count {k}"
        )));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(ClusteringError::InvalidParam("variance must be positive".into()));
    }
    let sum: usize = sizes.iter().sum();
    let counts: Vec<f64> = sizes
        .iter()
        .map(|&s| {
            let share = if sum == 0 { 0.0 } else { total_points as f64 * s as f64 / sum as f64 };
            share.round().max(1.0)
        })
        .collect();
    let total: f64 = counts.iter().sum();
    Ok(ClusterModel {
        centers: centers.clone(),
        weights: counts.iter().map(|c| c / total).collect(),
        variance,
    })
}

/// Posterior assignment under the mixture. Labels maximize
/// `ln w − ‖x − μ‖² / 2σ²`, lowest index on ties.
pub fn assign_gmm(model: &ClusterModel, v: &Vectors) -> (Vec<usize>, Vec<Vec<f64>>) {
    let logw: Vec<f64> = model.weights.iter().map(|w| w.ln()).collect();
    let two_var = 2.0 * model.variance;
    (0..v.len())
        .into_par_iter()
        .map(|i| {
            let x = v.row(i);
            let lp: Vec<f64> = model
                .centers
                .rows()
                .zip(&logw)
                .map(|(c, lw)| lw - sq_dist(x, c) / two_var)
                .collect();
            let mut best = 0;
            for (j, &l) in lp.iter().enumerate() {
                if l > lp[best] {
                    best = j;
                }
            }
            let m = lp[best];
            let z: f64 = lp.iter().map(|l| (l - m).exp()).sum();
            (best, lp.iter().map(|l| (l - m).exp() / z).collect())
        })
        .unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplars {
    /// Sample index per cluster; `None` for empty clusters.
    pub index: Vec<Option<usize>>,
    pub empty: Vec<usize>,
}

/// Per cluster, the member closest to its center (lowest index on ties).
pub fn select_exemplars(v: &Vectors, labels: &[usize], centers: &Vectors) -> Exemplars {
    let k = centers.len();
    let mut best: Vec<Option<(usize, f64)>> = vec![None; k];
    for (i, (x, &l)) in v.rows().zip(labels).enumerate() {
        let d = sq_dist(x, centers.row(l));
        match best[l] {
            Some((_, bd)) if bd <= d => {}
            _ => best[l] = Some((i, d)),
        }
    }
    Exemplars {
        index: best.iter().map(|b| b.map(|b| b.0)).collect(),
        empty: (0..k).filter(|&c| best[c].is_none()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::nearest_center;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn two_centers() -> Vectors {
        Vectors::from_rows(&[[0.0, 0.0], [10.0, 0.0]])
    }

    #[test]
    fn recluster_weights() {
        let c = two_centers();
        let m = density_recluster(&c, &[5, 5], 10, 1.0).unwrap();
        assert_eq!(m.weights, vec![0.5, 0.5]);
        let m = density_recluster(&c, &[9, 1], 10, 1.0).unwrap();
        assert_eq!(m.weights, vec![0.9, 0.1]);
        // counts round(100·1000/1001) = 100 and round(0.0999) = 0 lifted to 1
        let m = density_recluster(&c, &[1000, 1], 100, 1.0).unwrap();
        assert_eq!(m.weights, vec![100.0 / 101.0, 1.0 / 101.0]);
        assert!((m.weights[0] - 0.99).abs() < 1e-3 && m.weights[1] > 0.0);
    }

    #[test]
    fn gmm_assignment_cases() {
        let m = density_recluster(&two_centers(), &[5, 5], 10, 1.0).unwrap();
        let (l, r) = assign_gmm(&m, &Vectors::from_rows(&[[0.0, 0.0], [5.0, 0.0]]));
        assert_eq!(l[0], 0);
        assert!(r[0][0] > 0.5);
        assert_eq!(l[1], 0);
        assert_eq!(r[1], vec![0.5, 0.5]);

        let heavy_right = density_recluster(&two_centers(), &[1, 9], 10, 1.0).unwrap();
        let (l, _) = assign_gmm(&heavy_right, &Vectors::from_rows(&[[5.0, 0.0]]));
        assert_eq!(l[0], 1);
    }

    #[test]
    fn exemplar_cases() {
        let v = Vectors::from_rows(&[[0.0], [1.0], [2.0], [7.0]]);
        let c = Vectors::from_rows(&[[1.0], [7.0], [100.0]]);
        let e = select_exemplars(&v, &[0, 0, 0, 1], &c);
        assert_eq!(e.index, vec![Some(1), Some(3), None]);
        assert_eq!(e.empty, vec![2]);

        let mut rng = stream_rng(1, 1);
        let rows: Vec<[f64; 3]> = (0..50).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let v = Vectors::from_rows(&rows);
        let c = Vectors::from_rows(&[v.mean()]);
        let e = select_exemplars(&v, &[0; 50], &c);
        let brute = (0..50)
            .min_by(|&a, &b| sq_dist(v.row(a), c.row(0)).total_cmp(&sq_dist(v.row(b), c.row(0))))
            .unwrap();
        assert_eq!(e.index[0], Some(brute));
    }

    proptest! {
        #[test]
        fn uniform_mixture_is_nearest_center(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..40),
            cs in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..6),
            var in 0.1f64..20.0,
        ) {
            let v = Vectors::from_rows(&pts.iter().map(|p| [p.0, p.1]).collect::<Vec<_>>());
            let c = Vectors::from_rows(&cs.iter().map(|p| [p.0, p.1]).collect::<Vec<_>>());
            let m = density_recluster(&c, &vec![3; c.len()], 3 * c.len(), var).unwrap();
            let (labels, resp) = assign_gmm(&m, &v);
            for (i, x) in v.rows().enumerate() {
                prop_assert_eq!(labels[i], nearest_center(x, &c).0);
                prop_assert!((resp[i].iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn exemplars_survive_permutation(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..30),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let v = Vectors::from_rows(&pts.iter().map(|p| [p.0, p.1]).collect::<Vec<_>>());
            let labels: Vec<usize> = (0..v.len()).map(|i| i % 2).collect();
            let c = Vectors::from_rows(&[[0.5, 0.5], [-1.0, 2.0]]);
            let e = select_exemplars(&v, &labels, &c);
            let mut perm: Vec<usize> = (0..v.len()).collect();
            perm.shuffle(&mut stream_rng(seed, 0));
            let pv = v.select(&perm);
            let pl: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
            let pe = select_exemplars(&pv, &pl, &c);
            for k in 0..2 {
                let a = e.index[k].map(|i| v.row(i).to_vec());
                let b = pe.index[k].map(|i| pv.row(i).to_vec());
                // equal points tie; compare distances, which are permutation-free
                let da = a.map(|p| sq_dist(&p, c.row(k)));
                let db = b.map(|p| sq_dist(&p, c.row(k)));
                prop_assert_eq!(da, db);
            }
        }
    }
}

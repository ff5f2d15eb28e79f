use nalgebra::{DMatrix, SymmetricEigen};

use super::ClusteringError;
use crate::stats::median;
use crate::vectors::{sq_dist, Vectors};

/// Largest input accepted; the affinity matrix is dense.
pub const SPECTRAL_MAX_N: usize = 4000;

/// Row-normalized spectral embedding on the `k` smallest eigenvectors of
/// the symmetric normalized Laplacian of an RBF affinity whose bandwidth
/// `σ²` is the median pairwise squared distance.
pub fn spectral_embedding(v: &Vectors, k: usize) -> Result<Vectors, ClusteringError> {
    let n = v.len();
    if n == 0 {
        return Err(ClusteringError::EmptyInput);
    }
    if k == 0 || k > n {
        return Err(ClusteringError::KTooLarge { k, n });
    }
    if n > SPECTRAL_MAX_N {
        return Err(ClusteringError::InvalidParam(format!(
            "spectral embedding limited to {SPECTRAL_MAX_N} samples, got {n}"
        )));
    }
    let mut d2 = DMatrix::zeros(n, n);
    let mut off = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = sq_dist(v.row(i), v.row(j));
            d2[(i, j)] = d;
            d2[(j, i)] = d;
            off.push(d);
        }
    }
    let s2 = if off.is_empty() { 1.0 } else { median(&off) };
    let s2 = if s2 > 0.0 { s2 } else { 1.0 };
    let w = d2.map(|d| (-d / (2.0 * s2)).exp());
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let lap = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - w[(i, j)] / (deg[i] * deg[j]).sqrt()
    });
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let mut out = Vectors::zeros(n, k);
    for (c, &col) in order.iter().take(k).enumerate() {
        let vec = eig.eigenvectors.column(col);
        // deterministic sign: largest-magnitude entry positive
        let lead = (0..n).fold(0, |b, i| if vec[i].abs() > vec[b].abs() { i } else { b });
        let s = if vec[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            out.row_mut(i)[c] = s * vec[i];
        }
    }
    for i in 0..n {
        let r = out.row_mut(i);
        let nr = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nr > 0.0 {
            r.iter_mut().for_each(|x| *x /= nr);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rings_separate_in_embedding() {
        let mut rows = Vec::new();
        for i in 0..30 {
            let t = i as f64 / 30.0 * std::f64::consts::TAU;
            rows.push([t.cos(), t.sin()]);
            rows.push([6.0 * t.cos(), 6.0 * t.sin()]);
        }
        let e = spectral_embedding(&Vectors::from_rows(&rows), 2).unwrap();
        assert_eq!(e.len(), 60);
        assert!(e.rows().all(|r| ((r[0] * r[0] + r[1] * r[1]).sqrt() - 1.0).abs() < 1e-9));
    }
}

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::ClusteringError;
use crate::vectors::Vectors;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaLayout {
    pub coords: Vectors,
    /// Share of total variance carried by each output axis.
    pub explained_ratio: Vec<f64>,
}

/// Projection of centered data on its top principal axes. Each axis is
/// signed so that its largest-magnitude loading is positive.
pub fn pca_layout(v: &Vectors, out_dim: usize) -> Result<PcaLayout, ClusteringError> {
    if !(2..=3).contains(&out_dim) {
        return Err(ClusteringError::InvalidParam(format!("out_dim must be 2 or 3, got {out_dim}")));
    }
    if v.is_empty() {
        return Err(ClusteringError::EmptyInput);
    }
    let (n, d) = (v.len(), v.dim());
    let mean = v.mean();
    let centered = DMatrix::from_fn(n, d, |i, j| v.row(i)[j] - mean[j]);
    let cov = centered.transpose() * &centered / (n.max(2) - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();

    let mut coords = Vectors::zeros(n, out_dim);
    let mut explained_ratio = Vec::with_capacity(out_dim);
    for k in 0..out_dim {
        if k >= d {
            explained_ratio.push(0.0);
            continue;
        }
        let col = order[k];
        let mut axis: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
        let lead = axis
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > axis[best].abs() { i } else { best });
        if axis[lead] < 0.0 {
            axis.iter_mut().for_each(|x| *x = -*x);
        }
        for i in 0..n {
            coords.row_mut(i)[k] = centered.row(i).iter().zip(&axis).map(|(a, b)| a * b).sum();
        }
        let lambda = eig.eigenvalues[col].max(0.0);
        explained_ratio.push(if total > 0.0 { lambda / total } else { 0.0 });
    }
    Ok(PcaLayout {
        coords,
        explained_ratio,
    })
}

fn normalized(coords: &Vectors, rows: usize, cols: usize) -> Vec<(f64, f64)> {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for r in coords.rows() {
        x0 = x0.min(r[0]);
        x1 = x1.max(r[0]);
        y0 = y0.min(r[1]);
        y1 = y1.max(r[1]);
    }
    let scale = |v: f64, lo: f64, hi: f64, cells: usize| {
        if hi > lo {
            (v - lo) / (hi - lo) * (cells - 1) as f64
        } else {
            0.0
        }
    };
    coords
        .rows()
        .map(|r| (scale(r[0], x0, x1, cols), scale(r[1], y0, y1, rows)))
        .collect()
}

/// Total squared displacement between items (rescaled onto the grid's
/// index box) and their assigned `(row, col)` cells.
pub fn grid_displacement(coords: &Vectors, rows: usize, cols: usize, cells: &[(usize, usize)]) -> f64 {
    normalized(coords, rows, cols)
        .iter()
        .zip(cells)
        .map(|(p, &(r, c))| (p.0 - c as f64).powi(2) + (p.1 - r as f64).powi(2))
        .sum()
}

/// Minimum-cost assignment of `n` rows to `m ≥ n` columns (Hungarian
/// method with potentials, O(n²m)). Returns the column of each row.
fn hungarian(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based arrays; column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if owner[j] > 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

/// Snap 2-D coordinates to a `rows × cols` grid, one item per cell, with
/// the least total squared displacement. Items are first ordered by y then
/// x (row-major), which fixes the choice among equal-cost assignments.
pub fn grid_snap(coords: &Vectors, rows: usize, cols: usize) -> Result<Vec<(usize, usize)>, ClusteringError> {
    let n = coords.len();
    if rows * cols < n {
        return Err(ClusteringError::GridTooSmall { cells: rows * cols, n });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if coords.dim() < 2 {
        return Err(ClusteringError::DimMismatch { expected: 2, got: coords.dim() });
    }
    let p = normalized(coords, rows, cols);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p[a].1.total_cmp(&p[b].1).then(p[a].0.total_cmp(&p[b].0)).then(a.cmp(&b)));
    let assigned = hungarian(n, rows * cols, |i, c| {
        let q = p[order[i]];
        (q.0 - (c % cols) as f64).powi(2) + (q.1 - (c / cols) as f64).powi(2)
    });
    let mut out = vec![(0, 0); n];
    for (i, &c) in assigned.iter().enumerate() {
        out[order[i]] = (c / cols, c % cols);
    }
    Ok(out)
}

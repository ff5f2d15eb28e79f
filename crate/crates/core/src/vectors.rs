//! Dense row-major sample matrices.

use serde::{Deserialize, Serialize};

/// `n × dim` matrix of samples stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vectors {
    dim: usize,
    data: Vec<f64>,
}

impl Vectors {
    /// Panics if `data.len()` is not a multiple of `dim`.
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        assert_eq!(data.len() % dim, 0, "data length not a multiple of dim");
        Self { dim, data }
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self::new(dim, vec![0.0; n * dim])
    }

    /// Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            assert_eq!(r.as_ref().len(), dim, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let d = self.dim;
        &mut self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows picked by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self::new(self.dim, data)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        let n = self.len().max(1) as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Z-score each column; constant columns become zero.
    pub fn standardized(&self) -> Self {
        let mean = self.mean();
        let n = self.len().max(1) as f64;
        let mut sd = vec![0.0; self.dim];
        for r in self.rows() {
            for (j, v) in r.iter().enumerate() {
                sd[j] += (v - mean[j]).powi(2);
            }
        }
        sd.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        let mut out = self.clone();
        for i in 0..out.len() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = if sd[j] > 0.0 { (*v - mean[j]) / sd[j] } else { 0.0 };
            }
        }
        out
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `1 − cos(a, b)`; zero vectors are at distance 1 from everything.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    1.0 - dot(a, b) / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_access_and_select() {
        let v = Vectors::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        assert_eq!(v.len(), 3);
        assert_eq!(v.row(1), &[3.0, 4.0]);
        assert_eq!(v.select(&[2, 0]).row(0), &[5.0, 6.0]);
        assert_eq!(v.mean(), vec![3.0, 4.0]);
    }

    #[test]
    fn cosine_of_parallel_and_orthogonal() {
        assert!(cosine_distance(&[1.0, 0.0], &[2.0, 0.0]).abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}

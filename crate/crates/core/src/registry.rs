//! Name-keyed registries of interchangeable algorithms.

use std::collections::BTreeMap;

use crate::clustering::{minibatch_kmeans, pca_layout, spectral_embedding, ClusteringError, KMeansParams};
use crate::vectors::Vectors;

/// A set of trait objects addressable by name.
pub struct Registry<T: ?Sized> {
    entries: BTreeMap<String, Box<T>>,
}

impl<T: ?Sized> Default for Registry<T> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<T: ?Sized> Registry<T> {
    pub fn register(&mut self, name: impl Into<String>, item: Box<T>) {
        self.entries.insert(name.into(), item);
    }

    pub fn get(&self, name: &str) -> Option<&T> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Flat partition of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub labels: Vec<usize>,
    /// Mean of each cluster in the input space.
    pub centers: Vectors,
}

pub trait Partitioner: Send + Sync {
    fn partition(&self, v: &Vectors, k: usize, seed: u64) -> Result<Partition, ClusteringError>;
}

/// Mini-batch k-means.
#[derive(Debug, Clone, Copy, Default)]
pub struct KMeansPartitioner {
    pub batch_size: Option<usize>,
    pub max_iter: Option<usize>,
}

impl Partitioner for KMeansPartitioner {
    fn partition(&self, v: &Vectors, k: usize, seed: u64) -> Result<Partition, ClusteringError> {
        let d = KMeansParams::default();
        let r = minibatch_kmeans(
            v,
            &KMeansParams {
                k,
                seed,
                batch_size: self.batch_size.unwrap_or(d.batch_size),
                max_iter: self.max_iter.unwrap_or(d.max_iter),
                ..d
            },
        )?;
        Ok(Partition {
            labels: r.assignments,
            centers: r.centers,
        })
    }
}

/// k-means on a normalized spectral embedding.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpectralPartitioner;

impl Partitioner for SpectralPartitioner {
    fn partition(&self, v: &Vectors, k: usize, seed: u64) -> Result<Partition, ClusteringError> {
        let e = spectral_embedding(v, k)?;
        let r = minibatch_kmeans(
            &e,
            &KMeansParams {
                k,
                seed,
                batch_size: usize::MAX,
                ..Default::default()
            },
        )?;
        Ok(Partition {
            centers: class_means(v, &r.assignments, k),
            labels: r.assignments,
        })
    }
}

fn class_means(v: &Vectors, labels: &[usize], k: usize) -> Vectors {
    let mut sums = Vectors::zeros(k, v.dim());
    let mut counts = vec![0usize; k];
    for (x, &l) in v.rows().zip(labels) {
        counts[l] += 1;
        for (s, a) in sums.row_mut(l).iter_mut().zip(x) {
            *s += a;
        }
    }
    for (c, &m) in counts.iter().enumerate() {
        if m > 0 {
            sums.row_mut(c).iter_mut().for_each(|s| *s /= m as f64);
        }
    }
    sums
}

pub fn partitioners() -> Registry<dyn Partitioner> {
    let mut r: Registry<dyn Partitioner> = Registry::default();
    r.register("kmeans", Box::new(KMeansPartitioner::default()));
    r.register("spectral", Box::new(SpectralPartitioner));
    r
}

/// Low-dimensional coordinates for a set of identified samples.
pub trait Layout: Send + Sync {
    fn layout(&self, ids: &[String], v: &Vectors, out_dim: usize) -> Result<Vectors, ClusteringError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PcaLayoutStrategy;

impl Layout for PcaLayoutStrategy {
    fn layout(&self, _ids: &[String], v: &Vectors, out_dim: usize) -> Result<Vectors, ClusteringError> {
        Ok(pca_layout(v, out_dim)?.coords)
    }
}

/// Precomputed coordinates (e.g. from t-SNE or UMAP) looked up by id.
#[derive(Debug, Clone, Default)]
pub struct ExternalLayout {
    pub coords: BTreeMap<String, Vec<f64>>,
}

impl ExternalLayout {
    /// Read `id,x,y[,z]` rows.
    pub fn from_csv(path: impl AsRef<std::path::Path>) -> Result<Self, ClusteringError> {
        let err = |e: &dyn std::fmt::Display| ClusteringError::InvalidParam(format!("layout file: {e}"));
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path.as_ref())
            .map_err(|e| err(&e))?;
        let mut coords = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| err(&e))?;
            let id = rec.get(0).unwrap_or("").to_string();
            let xs = rec
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>().map_err(|e| err(&e)))
                .collect::<Result<Vec<_>, _>>()?;
            coords.insert(id, xs);
        }
        Ok(Self { coords })
    }
}

impl Layout for ExternalLayout {
    fn layout(&self, ids: &[String], _v: &Vectors, out_dim: usize) -> Result<Vectors, ClusteringError> {
        let mut data = Vec::with_capacity(ids.len() * out_dim);
        for id in ids {
            let c = self
                .coords
                .get(id)
                .ok_or_else(|| ClusteringError::InvalidParam(format!("no layout coordinates for `{id}`")))?;
            if c.len() < out_dim {
                return Err(ClusteringError::DimMismatch { expected: out_dim, got: c.len() });
            }
            data.extend_from_slice(&c[..out_dim]);
        }
        Ok(Vectors::new(out_dim, data))
    }
}

pub fn layouts() -> Registry<dyn Layout> {
    let mut r: Registry<dyn Layout> = Registry::default();
    r.register("pca", Box::new(PcaLayoutStrategy));
    r
}

use std::collections::BTreeMap;

use serde::Serialize;

use cartolab::clustering::{select_exemplars, silhouette, ward_tree, ClusteringError, Dendrogram};
use cartolab::model::load_embeddings;
use cartolab::registry::partitioners;
use cartolab::semiotics::{diversity_series, DiversityPoint};
use cartolab::Vectors;

use super::{emit, Analysis};
use crate::context::{ClusterAssignments, Context};
use crate::error::{ConfigError, Result};

pub struct Cluster;

#[derive(Serialize)]
struct ClusterOutput {
    #[serde(flatten)]
    assignments: ClusterAssignments,
    source: &'static str,
    partitioner: String,
    sizes: Vec<usize>,
    silhouette: Option<f64>,
    phylogeny: Option<Dendrogram>,
    diversity: BTreeMap<i32, DiversityPoint>,
}

impl Analysis for Cluster {
    fn about(&self) -> &'static str {
        "cluster mapel vectors; exemplars, phylogeny and diversity"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let cfg = ctx.cfg.cluster.clone();
        let seed = ctx.seed(name);
        let ds = ctx.dataset()?.clone();
        let mapels = ctx.mapels()?.mapels;
        let (keys, rows, source) = match ctx.cfg.dataset.embeddings.clone() {
            Some(path) => {
                ctx.track("embeddings", &path)?;
                let table = load_embeddings(&path)?;
                let mut keys = Vec::new();
                let mut rows = Vec::new();
                for m in &mapels {
                    match table.get(&m.key()) {
                        Some(v) => {
                            keys.push(m.key());
                            rows.push(v.iter().map(|&x| x as f64).collect::<Vec<f64>>());
                        }
                        None => ctx.skip(&m.key(), "no embedding"),
                    }
                }
                (keys, rows, "embeddings")
            }
            None => {
                let with: Vec<_> = mapels.iter().filter(|m| m.features.is_some()).collect();
                let keys = with.iter().map(|m| m.key()).collect();
                let rows = with.iter().map(|m| m.features.as_ref().unwrap().flatten()).collect();
                (keys, rows, "features")
            }
        };
        if rows.is_empty() {
            return Err(ClusteringError::EmptyInput.into());
        }
        let v = Vectors::from_rows(&rows).standardized();
        if cfg.k >= v.len() {
            return Err(ClusteringError::KTooLarge { k: cfg.k, n: v.len() }.into());
        }
        let reg = partitioners();
        let part = reg
            .get(&cfg.partitioner)
            .ok_or_else(|| ConfigError::BadValue(format!("unknown partitioner `{}`", cfg.partitioner)))?
            .partition(&v, cfg.k, seed)?;
        let ex = select_exemplars(&v, &part.labels, &part.centers);
        let mut sizes = vec![0; cfg.k];
        part.labels.iter().for_each(|&l| sizes[l] += 1);
        let labels32: Vec<u32> = part.labels.iter().map(|&l| l as u32).collect();
        let sil = silhouette(&v, &labels32, cfg.silhouette_cap, seed).ok();
        let phylogeny = ward_tree(&part.centers).ok();

        let year_of: BTreeMap<&str, i32> = ds.records.values().map(|r| (r.map_id.as_str(), r.year)).collect();
        let mut maps_per_year: BTreeMap<i32, usize> = BTreeMap::new();
        ds.records.values().for_each(|r| *maps_per_year.entry(r.year).or_default() += 1);
        let years: Vec<i32> = keys
            .iter()
            .map(|k: &String| year_of[k.rsplit_once(':').map_or(k.as_str(), |p| p.0)])
            .collect();
        let diversity = diversity_series(&part.labels, &years, &maps_per_year, cfg.k, cfg.active_min)?;

        let out = ClusterOutput {
            assignments: ClusterAssignments {
                n_clusters: cfg.k,
                exemplars: ex.index.iter().map(|i| i.map(|i| keys[i].clone())).collect(),
                keys,
                labels: part.labels,
                centers: part.centers.rows().map(<[f64]>::to_vec).collect(),
            },
            source,
            partitioner: cfg.partitioner.clone(),
            sizes,
            silhouette: sil,
            phylogeny,
            diversity,
        };
        emit(ctx, name, &cfg, &out)?;
        Ok(())
    }
}

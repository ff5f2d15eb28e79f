use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cartolab::image_ops::Mapel;
use cartolab::model::{load_coverage, load_metadata, Dataset};
use cartolab::rng::key_seed;
use cartolab::semiotics::SignCorpus;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::provenance::{read_result, sha256_file};

/// A record that an analysis could not use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub map_id: String,
    pub reason: String,
}

/// Output of the `mapels` step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapelOutput {
    pub mapels: Vec<Mapel>,
    pub skipped: Vec<Skipped>,
}

/// Output of the `cluster` step consumed downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignments {
    pub n_clusters: usize,
    pub keys: Vec<String>,
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Mapel key of each cluster's exemplar.
    pub exemplars: Vec<Option<String>>,
}

pub struct Signs {
    pub corpus: SignCorpus,
    pub mapels: Vec<Mapel>,
}

/// Shared state of one analysis run.
pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub skipped: Vec<Skipped>,
    pub notes: Vec<String>,
    pub outputs: Vec<PathBuf>,
    inputs: BTreeMap<String, String>,
    dataset: Option<Dataset>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Self {
            cfg,
            skipped: Vec::new(),
            notes: Vec::new(),
            outputs: Vec::new(),
            inputs: BTreeMap::new(),
            dataset: None,
        }
    }

    pub fn seed(&self, analysis: &str) -> u64 {
        key_seed(self.cfg.seed, analysis)
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.notes.push(msg);
    }

    pub fn skip(&mut self, map_id: &str, reason: impl Into<String>) {
        let reason = reason.into();
        log::warn!("skipping {map_id}: {reason}");
        self.skipped.push(Skipped {
            map_id: map_id.to_string(),
            reason,
        });
    }

    /// Record an input file digest under `label`.
    pub fn track(&mut self, label: impl Into<String>, path: &Path) -> Result<()> {
        let d = sha256_file(path)?;
        self.inputs.insert(label.into(), d);
        Ok(())
    }

    pub fn take_inputs(&mut self) -> BTreeMap<String, String> {
        std::mem::take(&mut self.inputs)
    }

    /// Metadata (and coverage) loaded once per run; rejected rows are
    /// recorded as skipped.
    pub fn dataset(&mut self) -> Result<&Dataset> {
        if self.dataset.is_none() {
            let paths = self.cfg.dataset.clone();
            self.track("metadata", &paths.metadata)?;
            let report = load_metadata(&paths.metadata)?;
            let mut ds = report.dataset;
            for e in report.rejected {
                self.skip("<metadata>", e.to_string());
            }
            if let Some(cov) = &paths.coverage {
                self.track("coverage", cov)?;
                for e in load_coverage(cov, &mut ds)? {
                    self.skip("<coverage>", e.to_string());
                }
            }
            self.dataset = Some(ds);
        }
        Ok(self.dataset.as_ref().expect("loaded above"))
    }

    fn prior<T: for<'de> Deserialize<'de>>(&mut self, file: &str, step: &'static str) -> Result<T> {
        let path = self.out(file);
        if !path.exists() {
            return Err(CliError::MissingInput {
                what: path.display().to_string(),
                step,
            });
        }
        self.track(file, &path)?;
        read_result(&path)
    }

    pub fn mapels(&mut self) -> Result<MapelOutput> {
        self.prior("mapels.json", "mapels")
    }

    pub fn clusters(&mut self) -> Result<ClusterAssignments> {
        self.prior("cluster.json", "cluster")
    }

    /// Clustered mapels of every dataset map as a sign corpus.
    pub fn signs(&mut self) -> Result<Signs> {
        let map_ids: Vec<String> = self.dataset()?.records.keys().cloned().collect();
        let out = self.mapels()?;
        let cl = self.clusters()?;
        let label: BTreeMap<&str, usize> = cl.keys.iter().map(String::as_str).zip(cl.labels.iter().copied()).collect();
        let mapels: Vec<Mapel> = out
            .mapels
            .into_iter()
            .filter_map(|mut m| {
                let l = *label.get(m.key().as_str())?;
                m.cluster_id = Some(l as u32);
                Some(m)
            })
            .collect();
        Ok(Signs {
            corpus: SignCorpus::from_mapels(map_ids, &mapels, cl.n_clusters),
            mapels,
        })
    }
}

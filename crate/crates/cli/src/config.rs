//! Run configuration: TOML or JSON, unknown keys rejected, defaults
//! materialized, relative paths resolved against the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cartolab::chrono_stats::GridSpec;
use cartolab::image_ops::MapelSize;
use cartolab::model::StrataVar;

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    /// Catalog CSV or JSONL.
    pub metadata: PathBuf,
    /// `map_id,lat,lon,area_deg2` rows.
    #[serde(default)]
    pub coverage: Option<PathBuf>,
    /// Externally computed mapel embeddings keyed `map_id:idx`; the
    /// interpretable features are used when absent.
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    /// `id,x,y` coordinates for the mosaic layout, keyed by cluster id.
    #[serde(default)]
    pub layout: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapelSection {
    pub size: MapelSize,
    pub cell_px: u32,
    pub spatial_sigma: f32,
    pub range_sigma: f32,
    pub blank_threshold: f64,
    pub n_max: usize,
    pub min_dist_px: f64,
    pub buffer_px: u32,
}

impl Default for MapelSection {
    fn default() -> Self {
        let p = cartolab::image_ops::MapelParams::default();
        Self {
            size: p.size,
            cell_px: p.cell_px,
            spatial_sigma: p.spatial_sigma,
            range_sigma: p.range_sigma,
            blank_threshold: p.blank_threshold,
            n_max: p.sampling.n_max,
            min_dist_px: p.sampling.min_dist_px,
            buffer_px: p.sampling.buffer_px,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterSection {
    pub k: usize,
    /// Registered partitioner name.
    pub partitioner: String,
    /// Instances needed for a cluster to be active in a year.
    pub active_min: u64,
    pub silhouette_cap: usize,
}

impl Default for ClusterSection {
    fn default() -> Self {
        Self {
            k: 16,
            partitioner: "kmeans".into(),
            active_min: 1,
            silhouette_cap: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuptureSection {
    pub window_steps: usize,
    pub stratum_frac: f64,
    pub overlap_frac: f64,
    pub bootstrap_n: usize,
    /// Equal-width strata for the characteristicity table.
    pub n_strata: usize,
    pub top_k: usize,
}

impl Default for RuptureSection {
    fn default() -> Self {
        Self {
            window_steps: 200,
            stratum_frac: 0.05,
            overlap_frac: 0.5,
            bootstrap_n: 1000,
            n_strata: 5,
            top_k: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComplexSection {
    pub presence_min: u32,
    pub alpha: f64,
    pub bh: bool,
}

impl Default for ComplexSection {
    fn default() -> Self {
        Self {
            presence_min: 3,
            alpha: 0.01,
            bh: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnivocitySection {
    pub reps: usize,
    pub sample_size: usize,
}

impl Default for UnivocitySection {
    fn default() -> Self {
        Self { reps: 1000, sample_size: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompositionSection {
    pub eps: f64,
    pub k: usize,
    pub train_size: usize,
    pub knn: usize,
    pub partitioner: String,
    /// Hypothesis names; empty runs the standard set.
    pub hypotheses: Vec<String>,
}

impl Default for CompositionSection {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            k: 8,
            train_size: 4000,
            knn: 7,
            partitioner: "kmeans".into(),
            hypotheses: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    /// Temporal bin widths (years) for the modularity sweep.
    pub widths: Vec<f64>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            widths: vec![1.0, 2.0, 5.0, 10.0, 20.0, 25.0, 50.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionSection {
    pub min_records: usize,
    pub n_strata: usize,
    pub fixed_effects: bool,
    pub cluster_robust: bool,
    pub backward_alpha: Option<f64>,
}

impl Default for DiffusionSection {
    fn default() -> Self {
        Self {
            min_records: 2,
            n_strata: 3,
            fixed_effects: false,
            cluster_robust: true,
            backward_alpha: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChronoSection {
    pub window: usize,
    pub sigma: f64,
    pub radius: usize,
    pub max_offset: usize,
    pub grid: GridSpec,
    pub min_cell_deg: f64,
}

impl Default for ChronoSection {
    fn default() -> Self {
        Self {
            window: 3,
            sigma: 2.5,
            radius: 5,
            max_offset: 10,
            grid: GridSpec::default(),
            min_cell_deg: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MosaicSection {
    pub rows: usize,
    pub cols: usize,
    pub tile_px: u32,
    /// Registered layout name (`pca`, or `external` with `dataset.layout`).
    pub layout: String,
}

impl Default for MosaicSection {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 4,
            tile_px: 49,
            layout: "pca".into(),
        }
    }
}

/// Resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Directory holding the config file; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
    pub dataset: DatasetPaths,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub strata: StrataVar,
    pub modes: bool,
    pub mapels: MapelSection,
    pub cluster: ClusterSection,
    pub rupture: RuptureSection,
    pub complexes: ComplexSection,
    pub univocity: UnivocitySection,
    pub composition: CompositionSection,
    pub network: NetworkSection,
    pub diffusion: DiffusionSection,
    pub chrono: ChronoSection,
    pub mosaic: MosaicSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: DatasetPaths,
    #[serde(default = "default_out")]
    out_dir: PathBuf,
    #[serde(default)]
    seed: i64,
    #[serde(default = "default_threads")]
    threads: i64,
    #[serde(default = "default_strata")]
    strata: StrataVar,
    #[serde(default)]
    modes: bool,
    #[serde(default)]
    mapels: MapelSection,
    #[serde(default)]
    cluster: ClusterSection,
    #[serde(default)]
    rupture: RuptureSection,
    #[serde(default)]
    complexes: ComplexSection,
    #[serde(default)]
    univocity: UnivocitySection,
    #[serde(default)]
    composition: CompositionSection,
    #[serde(default)]
    network: NetworkSection,
    #[serde(default)]
    diffusion: DiffusionSection,
    #[serde(default)]
    chrono: ChronoSection,
    #[serde(default)]
    mosaic: MosaicSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_threads() -> i64 {
    1
}

fn default_strata() -> StrataVar {
    StrataVar::Year
}

fn classify(message: String) -> ConfigError {
    match message.find("unknown field `") {
        Some(i) => {
            let rest = &message[i + "unknown field `".len()..];
            ConfigError::UnknownKey(rest.split('`').next().unwrap_or(rest).to_string())
        }
        None => ConfigError::BadValue(message),
    }
}

fn check(ok: bool, what: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::BadValue(what.to_string()))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parse configuration text; `format` is `toml` or `json`.
pub fn parse_config(text: &str, format: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = match format {
        "toml" => toml::from_str(text).map_err(|e| classify(e.message().to_string()))?,
        "json" => serde_json::from_str(text).map_err(|e| classify(e.to_string()))?,
        other => return Err(ConfigError::Format(other.to_string())),
    };
    check(raw.seed >= 0, "seed must be non-negative")?;
    check(raw.threads >= 1, "threads must be at least 1")?;
    check(raw.cluster.k >= 2, "cluster.k must be at least 2")?;
    check(raw.composition.k >= 2, "composition.k must be at least 2")?;
    check(raw.composition.eps > 0.0, "composition.eps must be positive")?;
    check(raw.rupture.window_steps >= 2, "rupture.window_steps must be at least 2")?;
    check(
        raw.rupture.stratum_frac > 0.0 && raw.rupture.stratum_frac <= 0.5,
        "rupture.stratum_frac must be in (0, 0.5]",
    )?;
    check(
        (0.0..1.0).contains(&raw.rupture.overlap_frac),
        "rupture.overlap_frac must be in [0, 1)",
    )?;
    check(raw.rupture.n_strata >= 2, "rupture.n_strata must be at least 2")?;
    check(raw.complexes.alpha > 0.0 && raw.complexes.alpha <= 1.0, "complexes.alpha must be in (0, 1]")?;
    check(raw.univocity.reps >= 1 && raw.univocity.sample_size >= 1, "univocity.reps and sample_size must be positive")?;
    check(raw.diffusion.n_strata >= 2, "diffusion.n_strata must be at least 2")?;
    check(raw.chrono.sigma > 0.0 && raw.chrono.radius >= 1, "chrono.sigma > 0 and chrono.radius ≥ 1 required")?;
    check(raw.chrono.window >= 1, "chrono.window must be at least 1")?;
    check(raw.chrono.grid.cell_deg > 0.0, "chrono.grid.cell_deg must be positive")?;
    check(raw.mosaic.rows >= 1 && raw.mosaic.cols >= 1 && raw.mosaic.tile_px >= 8, "mosaic grid must be non-empty, tiles ≥ 8 px")?;
    check(raw.network.widths.iter().all(|&w| w > 0.0), "network.widths must be positive")?;
    check(raw.mapels.cell_px >= 8, "mapels.cell_px must be at least 8")?;
    let mut dataset = raw.dataset;
    dataset.metadata = resolve(base_dir, &dataset.metadata);
    for p in [&mut dataset.coverage, &mut dataset.embeddings, &mut dataset.layout].into_iter().flatten() {
        *p = resolve(base_dir, p);
    }
    Ok(RunConfig {
        base_dir: base_dir.to_path_buf(),
        dataset,
        out_dir: resolve(base_dir, &raw.out_dir),
        seed: raw.seed as u64,
        threads: raw.threads as usize,
        strata: raw.strata,
        modes: raw.modes,
        mapels: raw.mapels,
        cluster: raw.cluster,
        rupture: raw.rupture,
        complexes: raw.complexes,
        univocity: raw.univocity,
        composition: raw.composition,
        network: raw.network,
        diffusion: raw.diffusion,
        chrono: raw.chrono,
        mosaic: raw.mosaic,
    })
}

/// Read and validate a `.toml` or `.json` configuration file.
pub fn validate_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &format, &base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("[dataset]\nmetadata = \"maps.csv\"\n", "toml", Path::new("/data")).unwrap();
        assert_eq!(c.dataset.metadata, PathBuf::from("/data/maps.csv"));
        assert_eq!(c.out_dir, PathBuf::from("/data/out"));
        assert_eq!(c.cluster, ClusterSection::default());
        assert_eq!(c.seed, 0);
        assert_eq!(c.strata, StrataVar::Year);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config("tsne = 1\n[dataset]\nmetadata = \"m.csv\"\n", "toml", Path::new(".")).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey(ref k) if k == "tsne"), "{e:?}");
        let e = parse_config(r#"{"dataset": {"metadata": "m.csv"}, "cluster": {"tsne": 2}}"#, "json", Path::new(".")).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey(ref k) if k == "tsne"), "{e:?}");
    }

    #[test]
    fn bad_values() {
        for text in [
            "seed = -3\n[dataset]\nmetadata = \"m.csv\"\n",
            "threads = 0\n[dataset]\nmetadata = \"m.csv\"\n",
            "[dataset]\nmetadata = \"m.csv\"\n[rupture]\noverlap_frac = 1.5\n",
            "strata = \"planet\"\n[dataset]\nmetadata = \"m.csv\"\n",
        ] {
            assert!(matches!(parse_config(text, "toml", Path::new(".")), Err(ConfigError::BadValue(_))), "{text}");
        }
        assert!(matches!(parse_config("", "yaml", Path::new(".")), Err(ConfigError::Format(_))));
    }
}

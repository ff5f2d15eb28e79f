//! Command-line front-end for the cartolab analyses: configuration,
//! provenance-stamped outputs and the analysis pipeline.

pub mod analyses;
pub mod config;
pub mod context;
pub mod error;
pub mod provenance;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Serialize;

use cartolab::model::write_mask;
use cartolab::rng::{rng_from, stream_rng};
use cartolab::synth::synthetic_map;

pub use analyses::{analyses, Analysis, PIPELINE};
pub use config::{parse_config, validate_config, RunConfig};
pub use context::{Context, Skipped};
pub use error::{CliError, ConfigError, Result};

/// What one analysis produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub analysis: String,
    pub outputs: Vec<PathBuf>,
    pub skipped: Vec<Skipped>,
    pub notes: Vec<String>,
}

impl RunReport {
    /// 0 on success, 2 when some records were skipped.
    pub fn exit_code(&self) -> i32 {
        if self.skipped.is_empty() {
            0
        } else {
            2
        }
    }
}

/// Run a single registered analysis.
pub fn run(name: &str, cfg: &RunConfig) -> Result<RunReport> {
    let reg = analyses();
    let analysis = reg.get(name).ok_or_else(|| CliError::UnknownAnalysis(name.to_string()))?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let mut ctx = Context::new(cfg);
    analysis.run(name, &mut ctx)?;
    Ok(RunReport {
        analysis: name.to_string(),
        outputs: ctx.outputs,
        skipped: ctx.skipped,
        notes: ctx.notes,
    })
}

/// Run the whole pipeline in order, stopping at the first fatal error.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<RunReport>> {
    PIPELINE.iter().map(|name| run(name, cfg)).collect()
}

/// Exit status for a finished command.
pub fn exit_code(result: &Result<Vec<RunReport>>) -> i32 {
    match result {
        Err(_) => 1,
        Ok(reports) => reports.iter().map(RunReport::exit_code).max().unwrap_or(0),
    }
}

const CITIES: [(&str, &str, f64, f64); 4] = [
    ("Paris", "FRA", 48.85, 2.35),
    ("Lyon", "FRA", 45.76, 4.84),
    ("London", "GBR", 51.51, -0.13),
    ("Edinburgh", "GBR", 55.95, -3.19),
];

const CREATORS: [&str; 6] = ["Arrowsmith", "Bartholomew", "Cassini", "Delisle", "Johnston", "Vandermaelen"];

/// Write a seeded corpus of `n_maps` synthetic sheets with masks,
/// `maps.csv`, `coverage.csv` and a `config.toml` sized for it.
pub fn write_synthetic_corpus(dir: &Path, n_maps: usize, size_px: u32, seed: u64) -> Result<PathBuf> {
    let images = dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| CliError::io(&images, e))?;
    let mut rng = rng_from(seed);
    let mut maps =
        String::from("map_id,image_path,mask_path,year,year_lo,year_hi,scale_denominator,lat,lon,city,country,creators,domestic\n");
    let mut coverage = String::from("map_id,lat,lon,area_deg2\n");
    for i in 0..n_maps {
        let id = format!("m{i:03}");
        let (img, mask) = synthetic_map(size_px, size_px, stream_rng(seed, i as u64).random());
        let img_rel = format!("images/{id}.png");
        let mask_rel = format!("images/{id}_mask.png");
        let p = dir.join(&img_rel);
        img.save(&p).map_err(|e| CliError::Png(format!("{}: {e}", p.display())))?;
        write_mask(&mask, dir.join(&mask_rel))?;

        let year = 1800 + (i * 100 / n_maps.max(1)) as i32 + rng.random_range(0..5);
        let (city, country, lat, lon) = *CITIES.choose(&mut rng).expect("non-empty");
        let a = rng.random_range(0..CREATORS.len());
        let b = (a + 1 + rng.random_range(0..CREATORS.len() - 1)) % CREATORS.len();
        let creators = if rng.random_bool(0.5) {
            CREATORS[a].to_string()
        } else {
            format!("{};{}", CREATORS[a], CREATORS[b])
        };
        let scale = [10_000, 25_000, 50_000, 100_000][rng.random_range(0..4)];
        let domestic = rng.random_bool(0.3 + 0.4 * i as f64 / n_maps.max(1) as f64);
        let (clat, clon) = if domestic {
            (lat + rng.random_range(-1.0..1.0), lon + rng.random_range(-1.0..1.0))
        } else {
            (rng.random_range(-60.0..70.0), rng.random_range(-170.0..170.0))
        };
        let area = rng.random_range(0.5..20.0);
        writeln!(
            maps,
            "{id},{img_rel},{mask_rel},{year},,,{scale},{lat},{lon},{city},{country},{creators},{domestic}"
        )
        .expect("string write");
        writeln!(coverage, "{id},{clat:.4},{clon:.4},{area:.4}").expect("string write");
    }
    let write = |name: &str, body: &str| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| CliError::io(&p, e))
    };
    write("maps.csv", &maps)?;
    write("coverage.csv", &coverage)?;
    let config = format!(
        r#"out_dir = "out"
seed = {seed}
threads = 1
strata = "year"

[dataset]
metadata = "maps.csv"
coverage = "coverage.csv"

[mapels]
n_max = 64
min_dist_px = 40.0

[cluster]
k = 8

[rupture]
window_steps = 20
stratum_frac = 0.2
bootstrap_n = 50
n_strata = 3

[univocity]
reps = 50
sample_size = 5

[composition]
k = 3
train_size = 500

[network]
widths = [5.0, 10.0, 20.0]

[mosaic]
rows = 3
cols = 3
"#
    );
    write("config.toml", &config)?;
    Ok(dir.join("config.toml"))
}

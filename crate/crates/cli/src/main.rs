use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cartolab::model::StrataVar;
use cartolab_cli::{exit_code, run, run_all, validate_config, write_synthetic_corpus, RunReport};

#[derive(Parser)]
#[command(name = "cartolab", version, about = "Computational analysis of historical map corpora")]
struct Cli {
    /// Run configuration (`.toml` or `.json`).
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Stratification variable for rupture analyses.
    #[arg(long, global = true)]
    strata: Option<Strata>,
    /// Semantic-mode weighting of signs.
    #[arg(long, global = true)]
    modes: Option<Switch>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strata {
    Year,
    Scale,
    Country,
    City,
    Creator,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Load and check the catalog.
    Ingest,
    /// Extract mapels and their features.
    Mapels,
    /// Partition mapels into clusters.
    Cluster,
    /// Rupture curve and table over the chosen strata.
    Rupture,
    /// Co-occurring cluster complexes.
    Complexes,
    /// Univocity of clusters towards semantic classes.
    Univocity,
    /// Quadrant co-location and semantic types.
    Composition,
    /// Creator network and temporal modularity.
    Network,
    /// City rupture matrix and dyadic regression.
    Diffusion,
    /// Time-series statistics and spatial attention.
    Chrono,
    /// Exemplar mosaic.
    Mosaic,
    /// Aggregate existing outputs.
    Report,
    /// Every step in pipeline order.
    All,
    /// Write a synthetic corpus with a ready-to-run config.
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        maps: usize,
        #[arg(long, default_value_t = 600)]
        size: u32,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Mapels => "mapels",
            Command::Cluster => "cluster",
            Command::Rupture => "rupture",
            Command::Complexes => "complexes",
            Command::Univocity => "univocity",
            Command::Composition => "composition",
            Command::Network => "network",
            Command::Diffusion => "diffusion",
            Command::Chrono => "chrono",
            Command::Mosaic => "mosaic",
            Command::Report => "report",
            Command::All => "all",
            Command::Synth { .. } => "synth",
        }
    }
}

fn summarize(reports: &[RunReport]) {
    for r in reports {
        for p in &r.outputs {
            println!("{}: wrote {}", r.analysis, p.display());
        }
        for s in &r.skipped {
            eprintln!("{}: skipped {}: {}", r.analysis, s.map_id, s.reason);
        }
        for n in &r.notes {
            eprintln!("{}: note: {n}", r.analysis);
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CARTOLAB_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Command::Synth { dir, maps, size } = &cli.command {
        let seed = cli.seed.unwrap_or(0);
        return match write_synthetic_corpus(dir, *maps, *size, seed) {
            Ok(cfg) => {
                println!("wrote {}", cfg.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        };
    }
    let mut cfg = match validate_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    if let Some(o) = cli.out {
        cfg.out_dir = o;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        cfg.threads = t;
    }
    if let Some(s) = cli.strata {
        cfg.strata = match s {
            Strata::Year => StrataVar::Year,
            Strata::Scale => StrataVar::Scale,
            Strata::Country => StrataVar::Country,
            Strata::City => StrataVar::City,
            Strata::Creator => StrataVar::Creator,
        };
    }
    if let Some(m) = cli.modes {
        cfg.modes = matches!(m, Switch::On);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
        log::warn!("thread pool: {e}");
    }
    let result = match cli.command.name() {
        "all" => run_all(&cfg),
        name => run(name, &cfg).map(|r| vec![r]),
    };
    match &result {
        Ok(reports) => summarize(reports),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}

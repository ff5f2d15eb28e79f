//! Subcommand implementations, registered by name.

mod chrono;
mod cluster;
mod composition;
mod diffusion;
mod ingest;
mod mapels;
mod mosaic;
mod network;
mod report;
mod semiotic;

use cartolab::registry::Registry;
use serde::Serialize;

use crate::context::Context;
use crate::error::Result;
use crate::provenance::{write_json, write_png, Provenance};

pub trait Analysis: Send + Sync {
    /// One-line description for `--help`.
    fn about(&self) -> &'static str;
    fn run(&self, name: &str, ctx: &mut Context) -> Result<()>;
}

/// Pipeline order.
pub const PIPELINE: [&str; 12] = [
    "ingest",
    "mapels",
    "cluster",
    "rupture",
    "complexes",
    "univocity",
    "composition",
    "network",
    "diffusion",
    "chrono",
    "mosaic",
    "report",
];

pub fn analyses() -> Registry<dyn Analysis> {
    let mut r: Registry<dyn Analysis> = Registry::default();
    r.register("ingest", Box::new(ingest::Ingest));
    r.register("mapels", Box::new(mapels::Mapels));
    r.register("cluster", Box::new(cluster::Cluster));
    r.register("rupture", Box::new(semiotic::Rupture));
    r.register("complexes", Box::new(semiotic::Complexes));
    r.register("univocity", Box::new(semiotic::Univocity));
    r.register("composition", Box::new(composition::Composition));
    r.register("network", Box::new(network::Network));
    r.register("diffusion", Box::new(diffusion::Diffusion));
    r.register("chrono", Box::new(chrono::Chrono));
    r.register("mosaic", Box::new(mosaic::Mosaic));
    r.register("report", Box::new(report::Report));
    r
}

/// Stamp and write `<name>.json`.
fn emit<P: Serialize, T: Serialize>(ctx: &mut Context, name: &str, params: &P, result: &T) -> Result<Provenance> {
    let prov = Provenance::new(
        name,
        ctx.cfg.seed,
        serde_json::to_value(params).expect("parameters serialize"),
        ctx.take_inputs(),
    );
    let path = ctx.out(&format!("{name}.json"));
    write_json(&path, &prov, result)?;
    ctx.outputs.push(path);
    Ok(prov)
}

fn emit_png(ctx: &mut Context, file: &str, img: &image::RgbImage, prov: &Provenance) -> Result<()> {
    let path = ctx.out(file);
    write_png(&path, img, prov)?;
    ctx.outputs.push(path);
    Ok(())
}

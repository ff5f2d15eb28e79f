use std::collections::BTreeMap;

use image::{imageops, Rgb, RgbImage};
use serde::Serialize;

use cartolab::image_ops::{neutralized_patch, Mapel};
use cartolab::registry::{layouts, ExternalLayout, Layout};
use cartolab::Vectors;

use super::{emit, emit_png, Analysis};
use crate::context::Context;
use crate::error::{CliError, ConfigError, Result};

pub struct Mosaic;

#[derive(Serialize)]
struct MosaicOutput {
    rows: usize,
    cols: usize,
    /// `(row, col)` per cluster.
    cells: Vec<(usize, usize)>,
    exemplars: Vec<Option<String>>,
}

impl Analysis for Mosaic {
    fn about(&self) -> &'static str {
        "grid mosaic of cluster exemplars laid out by similarity"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let cfg = ctx.cfg.mosaic.clone();
        let ds = ctx.dataset()?.clone();
        let cl = ctx.clusters()?;
        let k = cl.n_clusters;
        if cfg.rows * cfg.cols < k {
            return Err(CliError::GridTooSmall {
                rows: cfg.rows,
                cols: cfg.cols,
                clusters: k,
            });
        }
        let centers = Vectors::from_rows(&cl.centers);
        let ids: Vec<String> = (0..k).map(|c| c.to_string()).collect();
        let coords = match cfg.layout.as_str() {
            "external" => {
                let path = ctx
                    .cfg
                    .dataset
                    .layout
                    .clone()
                    .ok_or_else(|| ConfigError::BadValue("mosaic.layout = \"external\" needs dataset.layout".into()))?;
                ctx.track("layout", &path)?;
                ExternalLayout::from_csv(&path)?.layout(&ids, &centers, 2)?
            }
            other => layouts()
                .get(other)
                .ok_or_else(|| ConfigError::BadValue(format!("unknown layout `{other}`")))?
                .layout(&ids, &centers, 2)?,
        };
        let cells = cartolab::clustering::grid_snap(&coords, cfg.rows, cfg.cols)?;

        let mapels: BTreeMap<String, Mapel> = ctx.mapels()?.mapels.into_iter().map(|m| (m.key(), m)).collect();
        let t = cfg.tile_px;
        let mut canvas = RgbImage::from_pixel(cfg.cols as u32 * t, cfg.rows as u32 * t, Rgb([255, 255, 255]));
        let mut images: BTreeMap<String, RgbImage> = BTreeMap::new();
        for (c, key) in cl.exemplars.iter().enumerate() {
            let Some(m) = key.as_ref().and_then(|k| mapels.get(k)) else { continue };
            if !images.contains_key(&m.map_id) {
                let path = &ds.records[&m.map_id].image_path;
                let img = image::open(path)
                    .map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?
                    .to_rgb8();
                images.insert(m.map_id.clone(), img);
            }
            let tile = neutralized_patch(&images[&m.map_id], m.center, m.orientation_deg, t);
            let (r, col) = cells[c];
            imageops::replace(&mut canvas, &tile, (col as u32 * t) as i64, (r as u32 * t) as i64);
        }
        let out = MosaicOutput {
            rows: cfg.rows,
            cols: cfg.cols,
            cells,
            exemplars: cl.exemplars,
        };
        let prov = emit(ctx, name, &cfg, &out)?;
        emit_png(ctx, "mosaic.png", &canvas, &prov)
    }
}

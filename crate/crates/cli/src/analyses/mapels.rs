use rayon::prelude::*;

use cartolab::image_ops::{extract_mapels, MapelParams, SamplingParams};
use cartolab::model::MapRecord;

use super::{emit, Analysis};
use crate::context::{Context, MapelOutput, Skipped};
use crate::error::Result;

pub struct Mapels;

impl Analysis for Mapels {
    fn about(&self) -> &'static str {
        "extract mapels at graphic-load maxima with their features"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let records: Vec<MapRecord> = ctx.dataset()?.records.values().cloned().collect();
        let m = ctx.cfg.mapels;
        let params = MapelParams {
            size: m.size,
            cell_px: m.cell_px,
            spatial_sigma: m.spatial_sigma,
            range_sigma: m.range_sigma,
            blank_threshold: m.blank_threshold,
            sampling: SamplingParams {
                n_max: m.n_max,
                min_dist_px: m.min_dist_px,
                buffer_px: m.buffer_px,
                seed: ctx.seed(name),
            },
        };
        for r in &records {
            if r.image_path.exists() {
                ctx.track(format!("image:{}", r.map_id), &r.image_path)?;
            }
            if let Some(p) = r.mask_path.as_ref().filter(|p| p.exists()) {
                ctx.track(format!("mask:{}", r.map_id), p)?;
            }
        }
        let results: Vec<_> = records.par_iter().map(|r| (r.map_id.clone(), extract_mapels(r, &params))).collect();
        let mut out = MapelOutput {
            mapels: Vec::new(),
            skipped: Vec::new(),
        };
        for (id, res) in results {
            match res {
                Ok(ms) => {
                    log::info!("{id}: {} mapels", ms.len());
                    out.mapels.extend(ms);
                }
                Err(e) => {
                    ctx.skip(&id, e.to_string());
                    out.skipped.push(Skipped {
                        map_id: id,
                        reason: e.to_string(),
                    });
                }
            }
        }
        emit(ctx, name, &params, &out)?;
        Ok(())
    }
}

use serde::Serialize;

use cartolab::composition::{
    colocation_matrix, composition_features, quadrant_graph, quadrant_ratios, relationship_tests, semantic_types, shape_ratio,
    standard_hypotheses, CorrMatrix, Hypothesis, QuadrantProfile, TestReport, TypeParams,
};
use cartolab::model::load_mask;
use cartolab::registry::partitioners;
use cartolab::Vectors;

use super::{emit, emit_png, Analysis};
use crate::context::Context;
use crate::error::{ConfigError, Result};
use crate::provenance::heatmap;

pub struct Composition;

#[derive(Serialize)]
struct MapComposition {
    map_id: String,
    shape_ratio: f64,
    profile: QuadrantProfile,
    phi: Vec<f64>,
    semantic_type: Option<usize>,
}

#[derive(Serialize)]
struct CompositionOutput {
    maps: Vec<MapComposition>,
    colocation: Option<CorrMatrix>,
    tests: Vec<TestReport>,
    type_silhouette: Option<f64>,
}

impl Analysis for Composition {
    fn about(&self) -> &'static str {
        "quadrant profiles, co-location, relationship tests and semantic types"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let cfg = ctx.cfg.composition.clone();
        let seed = ctx.seed(name);
        let records: Vec<_> = ctx.dataset()?.records.values().cloned().collect();
        let hyps: Vec<Hypothesis> = if cfg.hypotheses.is_empty() {
            standard_hypotheses()
        } else {
            cfg.hypotheses
                .iter()
                .map(|h| Hypothesis::named(h).map_err(|_| ConfigError::BadValue(format!("unknown hypothesis `{h}`"))))
                .collect::<std::result::Result<_, _>>()?
        };
        let mut maps = Vec::new();
        for r in &records {
            let Some(path) = &r.mask_path else { continue };
            if !path.exists() {
                ctx.skip(&r.map_id, format!("mask {} not found", path.display()));
                continue;
            }
            ctx.track(format!("mask:{}", r.map_id), path)?;
            let mask = load_mask(path)?;
            match (quadrant_ratios(&mask), shape_ratio(&mask)) {
                (Ok(profile), Ok(shape)) => maps.push(MapComposition {
                    map_id: r.map_id.clone(),
                    shape_ratio: shape,
                    phi: composition_features(&profile, cfg.eps),
                    profile,
                    semantic_type: None,
                }),
                (Err(e), _) | (_, Err(e)) => ctx.skip(&r.map_id, e.to_string()),
            }
        }
        let profiles: Vec<QuadrantProfile> = maps.iter().map(|m| m.profile.clone()).collect();
        let colocation = match colocation_matrix(&profiles) {
            Ok(c) => Some(c),
            Err(e) => {
                ctx.note(format!("co-location: {e}"));
                None
            }
        };
        let mut tests = Vec::new();
        match quadrant_graph(&profiles) {
            Ok(g) => {
                for h in &hyps {
                    match relationship_tests(&g, h) {
                        Ok(t) => tests.push(t),
                        Err(e) => ctx.note(format!("{}: {e}", h.name)),
                    }
                }
            }
            Err(e) => ctx.note(format!("relationship tests: {e}")),
        }
        let mut type_silhouette = None;
        if maps.len() > cfg.k {
            let v = Vectors::from_rows(&maps.iter().map(|m| m.phi.clone()).collect::<Vec<_>>()).standardized();
            let reg = partitioners();
            let p = reg
                .get(&cfg.partitioner)
                .ok_or_else(|| ConfigError::BadValue(format!("unknown partitioner `{}`", cfg.partitioner)))?;
            let params = TypeParams {
                k: cfg.k,
                train_size: cfg.train_size,
                knn: cfg.knn,
                silhouette_cap: 5000,
                seed,
            };
            let t = semantic_types(&v, p, &params)?;
            for (m, l) in maps.iter_mut().zip(&t.labels) {
                m.semantic_type = Some(*l);
            }
            type_silhouette = Some(t.silhouette).filter(|s| s.is_finite());
        } else {
            ctx.note(format!("semantic types need more than k = {} maps with masks", cfg.k));
        }
        let png = colocation.as_ref().map(|c| {
            heatmap(
                &c.r.iter().map(|row| row.iter().map(|v| v.unwrap_or(f64::NAN)).collect()).collect::<Vec<Vec<f64>>>(),
                16,
            )
        });
        let out = CompositionOutput {
            maps,
            colocation,
            tests,
            type_silhouette,
        };
        let prov = emit(ctx, name, &cfg, &out)?;
        if let Some(png) = png {
            emit_png(ctx, "colocation.png", &png, &prov)?;
        }
        Ok(())
    }
}

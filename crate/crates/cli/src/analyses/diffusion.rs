use std::collections::BTreeMap;

use serde::Serialize;

use cartolab::chrono_stats::{dyadic_regression, min_max_normalize, DyadicDesign, DyadicOptions, DyadicReport};
use cartolab::semiotics::{diachronic_flow, geographic_rupture_matrix, DiachronicFlow, RuptureMatrix};

use super::{emit, emit_png, Analysis};
use crate::context::Context;
use crate::error::Result;
use crate::provenance::heatmap;

pub struct Diffusion;

#[derive(Serialize)]
struct DiffusionOutput {
    gamma: RuptureMatrix,
    flow: Option<DiachronicFlow>,
    regression: Option<DyadicReport>,
}

impl Analysis for Diffusion {
    fn about(&self) -> &'static str {
        "city rupture matrix, diachronic flow and the dyadic city regression"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let cfg = ctx.cfg.diffusion;
        let semantic = ctx.cfg.modes;
        let ds = ctx.dataset()?.clone();
        let signs = ctx.signs()?;
        let corpus = &signs.corpus;
        let recs: Vec<_> = corpus.map_ids.iter().map(|id| &ds.records[id]).collect();
        let groups: Vec<Option<String>> = recs.iter().map(|r| r.pub_city.clone()).collect();
        let years: Vec<Option<f64>> = recs.iter().map(|r| Some(r.year as f64)).collect();
        let gamma = geographic_rupture_matrix(corpus, &groups, cfg.min_records, semantic)?;
        let flow = match diachronic_flow(corpus, &years, &groups, cfg.n_strata, cfg.min_records, semantic) {
            Ok(f) => Some(f),
            Err(e) => {
                ctx.note(format!("diachronic flow: {e}"));
                None
            }
        };

        // per-city descriptors
        let mut year_sum: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        let mut country: BTreeMap<&str, Option<&str>> = BTreeMap::new();
        for r in &recs {
            if let Some(c) = &r.pub_city {
                let e = year_sum.entry(c).or_insert((0.0, 0));
                e.0 += r.year as f64;
                e.1 += 1;
                country.entry(c).or_insert(r.pub_country.as_deref());
            }
        }
        let g = &gamma.groups;
        let mut pairs = Vec::new();
        let (mut gap, mut size, mut same, mut y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..g.len() {
            for j in 0..i {
                let rho = gamma.rho[i][j];
                if !rho.is_finite() {
                    continue;
                }
                let (a, b) = (year_sum[g[i].as_str()], year_sum[g[j].as_str()]);
                pairs.push((i, j));
                gap.push((a.0 / a.1 as f64 - b.0 / b.1 as f64).abs());
                size.push((gamma.records[i] as f64 * gamma.records[j] as f64).ln());
                same.push(f64::from(country[g[i].as_str()].is_some() && country[g[i].as_str()] == country[g[j].as_str()]));
                y.push(rho);
            }
        }
        let mut predictors = Vec::new();
        for (label, col) in [("year_gap", gap), ("size", size), ("same_country", same)] {
            let spread = col.iter().any(|&v| v != col[0]);
            if spread {
                predictors.push((label.to_string(), min_max_normalize(&col)));
            } else if !col.is_empty() {
                ctx.note(format!("predictor {label} is constant and left out"));
            }
        }
        let opts = DyadicOptions {
            fixed_effects: cfg.fixed_effects,
            cluster_robust: cfg.cluster_robust,
            backward_alpha: cfg.backward_alpha,
        };
        let design = DyadicDesign {
            pairs,
            predictors,
            response: y,
        };
        let regression = match dyadic_regression(&design, &opts) {
            Ok(r) => Some(r),
            Err(e) => {
                ctx.note(format!("city regression: {e}"));
                None
            }
        };
        let png = heatmap(&gamma.rho, 16);
        let out = DiffusionOutput { gamma, flow, regression };
        let prov = emit(ctx, name, &(cfg, semantic), &out)?;
        emit_png(ctx, "gamma.png", &png, &prov)
    }
}

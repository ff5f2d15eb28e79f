use std::collections::BTreeMap;

use serde::Serialize;

use cartolab::model::StrataVar;
use cartolab::semiotics::{
    build_category_table, build_strata_table, characteristicity, detect_complexes, rupture, rupture_curve, top_characteristic,
    univocity, univocity_bootstrap, univocity_per_map, ComplexParams, CurvePoint, RuptureCurveParams, SemanticSymbolicCounts,
    StrataTable, UnivocityEstimate,
};

use super::{emit, emit_png, Analysis};
use crate::context::Context;
use crate::error::Result;
use crate::provenance::heatmap;

pub struct Rupture;
pub struct Complexes;
pub struct Univocity;

#[derive(Serialize)]
struct RuptureOutput {
    strata: StrataVar,
    semantic: bool,
    curve: Option<Vec<CurvePoint>>,
    peak: Option<CurvePoint>,
    strata_labels: Vec<String>,
    counts: Vec<Vec<u64>>,
    empty_strata: Vec<usize>,
    /// Most characteristic clusters per stratum.
    characteristic: Vec<Vec<(usize, f64)>>,
    /// ρ between consecutive strata (continuous) or all pairs (categorical).
    rupture: Vec<Vec<f64>>,
}

fn pairwise(table: &StrataTable) -> Vec<Vec<f64>> {
    let cols: Vec<Vec<f64>> = (0..table.n_strata()).map(|s| table.column(s)).collect();
    cols.iter()
        .map(|a| cols.iter().map(|b| rupture(a, b).unwrap_or(f64::NAN)).collect())
        .collect()
}

impl Analysis for Rupture {
    fn about(&self) -> &'static str {
        "strata tables, characteristicity and the sliding rupture curve"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let cfg = ctx.cfg.rupture;
        let (var, semantic) = (ctx.cfg.strata, ctx.cfg.modes);
        let seed = ctx.seed(name);
        let ds = ctx.dataset()?.clone();
        let signs = ctx.signs()?;
        let corpus = &signs.corpus;
        let records: Vec<_> = corpus.map_ids.iter().map(|id| &ds.records[id]).collect();
        let assignments: Vec<usize> = corpus.signs.iter().map(|s| s.cluster).collect();

        let out = if var.is_continuous() {
            let map_values: Vec<Option<f64>> = records
                .iter()
                .map(|r| match var {
                    StrataVar::Year => Some(r.year as f64),
                    _ => r.scale_denominator.filter(|s| *s > 0.0).map(f64::log10),
                })
                .collect();
            let params = RuptureCurveParams {
                window_steps: cfg.window_steps,
                stratum_frac: cfg.stratum_frac,
                overlap_frac: cfg.overlap_frac,
                bootstrap_n: cfg.bootstrap_n,
                semantic,
                seed,
            };
            let curve = match rupture_curve(corpus, &map_values, &params) {
                Ok(c) => Some(c),
                Err(e) => {
                    ctx.note(format!("rupture curve: {e}"));
                    None
                }
            };
            let peak = curve
                .as_ref()
                .and_then(|c| c.iter().filter(|p| p.rho.is_finite()).max_by(|a, b| a.rho.total_cmp(&b.rho)).copied());
            let values: Vec<f64> = corpus.signs.iter().map(|s| map_values[s.map].unwrap_or(f64::NAN)).collect();
            let finite = values.iter().copied().filter(|v| v.is_finite());
            let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            let edges: Vec<f64> = (0..=cfg.n_strata)
                .map(|i| lo + (hi - lo) * i as f64 / cfg.n_strata as f64)
                .collect();
            let table = build_strata_table(&assignments, &values, &edges, corpus.n_clusters, None)?;
            let chi = characteristicity(&table);
            let consecutive = (1..table.n_strata())
                .map(|s| rupture(&table.column(s - 1), &table.column(s)).unwrap_or(f64::NAN))
                .collect();
            RuptureOutput {
                strata: var,
                semantic,
                curve,
                peak,
                strata_labels: table.strata_labels.clone(),
                counts: table.counts.clone(),
                empty_strata: table.empty_strata.clone(),
                characteristic: (0..table.n_strata()).map(|s| top_characteristic(&chi, s, cfg.top_k)).collect(),
                rupture: vec![consecutive],
            }
        } else {
            let mut a = Vec::new();
            let mut cats = Vec::new();
            for (s, &c) in corpus.signs.iter().zip(&assignments) {
                for key in cartolab::model::Dataset::stratum_keys(records[s.map], var) {
                    if let cartolab::model::StratumKey::Category(k) = key {
                        a.push(c);
                        cats.push(Some(k));
                    }
                }
            }
            let table = build_category_table(&a, &cats, corpus.n_clusters, None)?;
            let chi = characteristicity(&table);
            RuptureOutput {
                strata: var,
                semantic,
                curve: None,
                peak: None,
                strata_labels: table.strata_labels.clone(),
                counts: table.counts.clone(),
                empty_strata: table.empty_strata.clone(),
                characteristic: (0..table.n_strata()).map(|s| top_characteristic(&chi, s, cfg.top_k)).collect(),
                rupture: pairwise(&table),
            }
        };
        let png = heatmap(
            &out.counts.iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect::<Vec<Vec<f64>>>(),
            12,
        );
        let prov = emit(ctx, name, &(cfg, var, semantic), &out)?;
        emit_png(ctx, "rupture_table.png", &png, &prov)
    }
}

impl Analysis for Complexes {
    fn about(&self) -> &'static str {
        "Fisher co-presence tests and Louvain sign complexes"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let c = ctx.cfg.complexes;
        let params = ComplexParams {
            presence_min: c.presence_min,
            alpha: c.alpha,
            bh: c.bh,
            seed: ctx.seed(name),
        };
        let signs = ctx.signs()?;
        let report = detect_complexes(&signs.corpus, &params);
        emit(ctx, name, &params, &report)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct UnivocityOutput {
    maps_with_modes: usize,
    pooled: f64,
    per_map: f64,
    bootstrap: UnivocityEstimate,
    by_country: BTreeMap<String, f64>,
}

impl Analysis for Univocity {
    fn about(&self) -> &'static str {
        "univocity of sign usage across semantic modes"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let u = ctx.cfg.univocity;
        let seed = ctx.seed(name);
        let ds = ctx.dataset()?.clone();
        let signs = ctx.signs()?;
        let x = SemanticSymbolicCounts::from_corpus(&signs.corpus);
        let subset: Vec<usize> = (0..x.per_map.len()).filter(|&m| !x.per_map[m].is_empty()).collect();
        let pooled = univocity(&x, &subset)?;
        let per_map = univocity_per_map(&x, &subset)?;
        let bootstrap = univocity_bootstrap(&x, &subset, u.reps, u.sample_size.min(subset.len()), seed)?;
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for &m in &subset {
            if let Some(c) = &ds.records[&signs.corpus.map_ids[m]].pub_country {
                groups.entry(c.clone()).or_default().push(m);
            }
        }
        let by_country = groups
            .into_iter()
            .filter_map(|(c, ms)| univocity(&x, &ms).ok().map(|v| (c, v)))
            .collect();
        let out = UnivocityOutput {
            maps_with_modes: subset.len(),
            pooled,
            per_map,
            bootstrap,
            by_country,
        };
        emit(ctx, name, &u, &out)?;
        Ok(())
    }
}

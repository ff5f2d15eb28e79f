
use serde::Serialize;

use cartolab::chrono_stats::{
    attention_raster, domestic_share_series, gaussian_smooth, ks_cumsum, ks_statistic, lag_peaks, lagged_correlation, mann_kendall,
    DomesticSeries, LagPoint, MannKendall,
};
use cartolab::model::CoverageGeom;

use super::{emit, emit_png, Analysis};
use crate::context::Context;
use crate::error::Result;
use crate::provenance::heatmap;

pub struct Chrono;

#[derive(Serialize)]
struct AttentionSummary {
    total: f64,
    outside_mass: f64,
    skipped: usize,
    max_cell: f64,
}

#[derive(Serialize)]
struct ChronoOutput {
    domestic: DomesticSeries,
    trend: Option<MannKendall>,
    /// KS between publication years of domestic and foreign maps.
    ks_years: Option<f64>,
    /// KS-type statistic on their yearly cumulative counts.
    ks_hat_years: Option<f64>,
    /// Domestic (a) against foreign (b) yearly volumes.
    lag: Option<Vec<LagPoint>>,
    lag_peaks: Vec<i64>,
    attention: Option<AttentionSummary>,
}

impl Analysis for Chrono {
    fn about(&self) -> &'static str {
        "domestic-focus trend, lagged volumes, KS statistics and spatial attention"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let cfg = ctx.cfg.chrono;
        let records: Vec<_> = ctx.dataset()?.records.values().cloned().collect();
        let domestic = domestic_share_series(&records, cfg.window, cfg.sigma, cfg.radius)?;
        let present: Vec<f64> = domestic.smoothed.iter().flatten().copied().collect();
        let trend = match mann_kendall(&present) {
            Ok(m) => Some(m),
            Err(e) => {
                ctx.note(format!("trend: {e}"));
                None
            }
        };

        let dom_years: Vec<f64> = records.iter().filter(|r| r.domestic == Some(true)).map(|r| r.year as f64).collect();
        let for_years: Vec<f64> = records.iter().filter(|r| r.domestic == Some(false)).map(|r| r.year as f64).collect();
        let ks_years = ks_statistic(&dom_years, &for_years).ok();
        let mut lag = None;
        let mut ks_hat_years = None;
        let mut peaks = Vec::new();
        if let (Some(y0), Some(y1)) = (records.iter().map(|r| r.year).min(), records.iter().map(|r| r.year).max()) {
            let len = (y1 - y0 + 1) as usize;
            let mut a = vec![0.0; len];
            let mut b = vec![0.0; len];
            for r in &records {
                match r.domestic {
                    Some(true) => a[(r.year - y0) as usize] += 1.0,
                    Some(false) => b[(r.year - y0) as usize] += 1.0,
                    None => {}
                }
            }
            ks_hat_years = ks_cumsum(&a, &b).ok();
            let max_offset = cfg.max_offset.min(len.saturating_sub(10));
            if len >= 10 {
                let sa = gaussian_smooth(&a, cfg.sigma, cfg.radius)?;
                let sb = gaussian_smooth(&b, cfg.sigma, cfg.radius)?;
                match lagged_correlation(&sa, &sb, max_offset) {
                    Ok(c) => {
                        peaks = lag_peaks(&c).into_iter().map(|i| c[i].tau).collect();
                        lag = Some(c);
                    }
                    Err(e) => ctx.note(format!("lagged correlation: {e}")),
                }
            } else {
                ctx.note("lagged correlation needs at least 10 years");
            }
        }

        let mut attention = None;
        let mut png = None;
        if records.iter().any(|r| !r.coverage.is_empty()) {
            let geoms: Vec<&[CoverageGeom]> = records.iter().map(|r| r.coverage.as_slice()).collect();
            let raster = attention_raster(geoms, &cfg.grid, cfg.min_cell_deg);
            let g = raster.grid;
            // north up, log scale
            let rows: Vec<Vec<f64>> = (0..g.n_lat)
                .rev()
                .map(|r| (0..g.n_lon).map(|c| raster.at(r, c).ln_1p()).collect())
                .collect();
            png = Some(heatmap(&rows, 1));
            attention = Some(AttentionSummary {
                total: raster.total(),
                outside_mass: raster.outside_mass,
                skipped: raster.skipped,
                max_cell: raster.intensity.iter().copied().fold(0.0, f64::max),
            });
        }
        let out = ChronoOutput {
            domestic,
            trend,
            ks_years,
            ks_hat_years,
            lag,
            lag_peaks: peaks,
            attention,
        };
        let prov = emit(ctx, name, &cfg, &out)?;
        if let Some(png) = png {
            emit_png(ctx, "attention.png", &png, &prov)?;
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use crate::model::CoverageGeom;

/// Regular lat/lon grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub lat_min: f64,
    pub lon_min: f64,
    pub cell_deg: f64,
    pub n_lat: usize,
    pub n_lon: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lat_min: -90.0,
            lon_min: -180.0,
            cell_deg: 0.5,
            n_lat: 360,
            n_lon: 720,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRaster {
    pub grid: GridSpec,
    /// Row-major, row 0 at `lat_min`.
    pub intensity: Vec<f64>,
    /// Mass falling outside the grid.
    pub outside_mass: f64,
    /// Records without any coverage geometry.
    pub skipped: usize,
}

impl AttentionRaster {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.intensity[row * self.grid.n_lon + col]
    }

    pub fn total(&self) -> f64 {
        self.intensity.iter().sum()
    }
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Accumulates one unit of mass per record, spread uniformly over its
/// footprint. Each geometry is a square of side `sqrt(area)` around its
/// center, enlarged to at least `min_cell_deg`; a record with several
/// geometries splits its mass by area.
pub fn attention_raster<'a, I>(records: I, grid: &GridSpec, min_cell_deg: f64) -> AttentionRaster
where
    I: IntoIterator<Item = &'a [CoverageGeom]>,
{
    let mut intensity = vec![0.0; grid.n_lat * grid.n_lon];
    let mut outside = 0.0;
    let mut skipped = 0;
    let c = grid.cell_deg;
    for geoms in records {
        if geoms.is_empty() {
            skipped += 1;
            continue;
        }
        let sides: Vec<f64> = geoms.iter().map(|g| g.area_deg2.max(0.0).sqrt().max(min_cell_deg)).collect();
        let total_area: f64 = sides.iter().map(|s| s * s).sum();
        for (g, &side) in geoms.iter().zip(&sides) {
            let density = 1.0 / total_area;
            let (lat0, lat1) = (g.center.0 - side / 2.0, g.center.0 + side / 2.0);
            let (lon0, lon1) = (g.center.1 - side / 2.0, g.center.1 + side / 2.0);
            let r0 = ((lat0 - grid.lat_min) / c).floor().max(0.0) as usize;
            let r1 = (((lat1 - grid.lat_min) / c).ceil().max(0.0) as usize).min(grid.n_lat);
            let c0 = ((lon0 - grid.lon_min) / c).floor().max(0.0) as usize;
            let c1 = (((lon1 - grid.lon_min) / c).ceil().max(0.0) as usize).min(grid.n_lon);
            let mut inside = 0.0;
            for r in r0..r1 {
                let y0 = grid.lat_min + r as f64 * c;
                let dy = overlap(lat0, lat1, y0, y0 + c);
                for col in c0..c1 {
                    let x0 = grid.lon_min + col as f64 * c;
                    let m = dy * overlap(lon0, lon1, x0, x0 + c) * density;
                    intensity[r * grid.n_lon + col] += m;
                    inside += m;
                }
            }
            outside += side * side * density - inside;
        }
    }
    AttentionRaster {
        grid: *grid,
        intensity,
        outside_mass: outside.max(0.0),
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use proptest::prelude::*;
    use rand::Rng;

    fn grid() -> GridSpec {
        GridSpec {
            lat_min: 40.0,
            lon_min: 0.0,
            cell_deg: 0.5,
            n_lat: 20,
            n_lon: 20,
        }
    }

    fn geom(lat: f64, lon: f64, area: f64) -> CoverageGeom {
        CoverageGeom { center: (lat, lon), area_deg2: area }
    }

    #[test]
    fn point_fills_one_cell() {
        let r = attention_raster([&[geom(42.25, 3.75, 0.0)][..]], &grid(), 0.5);
        assert!((r.at(4, 7) - 1.0).abs() < 1e-12);
        assert!((r.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_cells_and_additivity() {
        let a = [geom(42.0, 4.0, 1.0)];
        let r = attention_raster([&a[..]], &grid(), 0.5);
        for (row, col) in [(3, 7), (3, 8), (4, 7), (4, 8)] {
            assert!((r.at(row, col) - 0.25).abs() < 1e-12);
        }
        let b = [geom(42.25, 4.25, 0.0)];
        let two = attention_raster([&a[..], &b[..]], &grid(), 0.5);
        assert!((two.at(4, 8) - 1.25).abs() < 1e-12);
        assert!((two.total() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn clipping_and_skips() {
        let r = attention_raster([&[geom(40.0, 0.0, 1.0)][..], &[][..]], &grid(), 0.5);
        assert!((r.total() - 0.25).abs() < 1e-12);
        assert!((r.outside_mass - 0.75).abs() < 1e-12);
        assert_eq!(r.skipped, 1);
    }

    proptest! {
        #[test]
        fn mass_is_conserved(seed in 0u64..1000, n in 1usize..30) {
            let mut rng = rng_from(seed);
            let recs: Vec<Vec<CoverageGeom>> = (0..n)
                .map(|_| (0..rng.random_range(1..3)).map(|_| geom(rng.random_range(42.0..48.0), rng.random_range(2.0..8.0), rng.random_range(0.0..4.0))).collect())
                .collect();
            let r = attention_raster(recs.iter().map(|v| v.as_slice()), &grid(), 0.5);
            prop_assert!((r.total() + r.outside_mass - n as f64).abs() < 1e-9);
            prop_assert!(r.intensity.iter().all(|&v| v >= 0.0));
        }
    }
}

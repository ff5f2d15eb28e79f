use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Result, SemioticsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityPoint {
    pub active: usize,
    /// Active clusters over all clusters.
    pub macro_diversity: f64,
    /// Macro diversity over the number of maps of the year.
    pub micro_diversity: f64,
}

/// Yearly diversity. A cluster is active in a year with at least
/// `active_min` instances. Every year of `maps_per_year` gets a point.
pub fn diversity_series(
    assignments: &[usize],
    years: &[i32],
    maps_per_year: &BTreeMap<i32, usize>,
    n_clusters: usize,
    active_min: u64,
) -> Result<BTreeMap<i32, DiversityPoint>> {
    if assignments.len() != years.len() {
        return Err(SemioticsError::DimensionMismatch {
            expected: assignments.len(),
            got: years.len(),
        });
    }
    if n_clusters == 0 {
        return Err(SemioticsError::InvalidParam("no clusters".into()));
    }
    let mut counts: BTreeMap<i32, BTreeMap<usize, u64>> = BTreeMap::new();
    for (&c, &y) in assignments.iter().zip(years) {
        *counts.entry(y).or_default().entry(c).or_insert(0) += 1;
    }
    let all_years: BTreeSet<i32> = counts.keys().chain(maps_per_year.keys()).copied().collect();
    let mut out = BTreeMap::new();
    for y in all_years {
        let maps = maps_per_year.get(&y).copied().unwrap_or(0);
        let active = counts
            .get(&y)
            .map_or(0, |c| c.values().filter(|&&v| v >= active_min).count());
        if maps == 0 {
            if counts.contains_key(&y) {
                return Err(SemioticsError::ZeroMaps(y));
            }
            continue;
        }
        let macro_diversity = active as f64 / n_clusters as f64;
        out.insert(
            y,
            DiversityPoint {
                active,
                macro_diversity,
                micro_diversity: macro_diversity / maps as f64,
            },
        );
    }
    Ok(out)
}

/// Yearly mean number of clusters present per map; a cluster is present in
/// a map with at least `presence_min` instances.
pub fn complexity_series(per_map: &[(i32, Vec<usize>)], presence_min: u32) -> BTreeMap<i32, f64> {
    let mut acc: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
    for (year, clusters) in per_map {
        let mut c: BTreeMap<usize, u32> = BTreeMap::new();
        for &k in clusters {
            *c.entry(k).or_insert(0) += 1;
        }
        let present = c.values().filter(|&&v| v >= presence_min).count();
        let e = acc.entry(*year).or_insert((0.0, 0));
        e.0 += present as f64;
        e.1 += 1;
    }
    acc.into_iter().map(|(y, (s, n))| (y, s / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn activity_threshold() {
        let maps = BTreeMap::from([(1800, 2), (1801, 4)]);
        let d = diversity_series(&[0, 0, 0, 1, 1], &[1800; 5], &maps, 10, 3).unwrap();
        assert_eq!(d[&1800].active, 1);
        assert_eq!(d[&1800].macro_diversity, 0.1);
        assert_eq!(d[&1800].micro_diversity, 0.05);
        assert_eq!(d[&1801].active, 0);
        let err = diversity_series(&[0], &[1900], &maps, 10, 3);
        assert_eq!(err, Err(SemioticsError::ZeroMaps(1900)));
    }

    #[test]
    fn complexity_cases() {
        let c = complexity_series(&[(1800, vec![0, 0, 1]), (1801, vec![0, 1, 2]), (1801, vec![3, 4, 5])], 1);
        assert_eq!(c[&1800], 2.0);
        assert_eq!(c[&1801], 3.0);
        let c = complexity_series(&[(1800, vec![0, 0, 1])], 2);
        assert_eq!(c[&1800], 1.0);
    }

    proptest! {
        #[test]
        fn diversity_matches_recount(items in proptest::collection::vec((0usize..6, 1800i32..1805), 0..200)) {
            let (a, y): (Vec<usize>, Vec<i32>) = items.iter().copied().unzip();
            let maps: BTreeMap<i32, usize> = (1800..1805).map(|y| (y, (y - 1798) as usize)).collect();
            let d = diversity_series(&a, &y, &maps, 6, 3).unwrap();
            for yr in 1800..1805 {
                let active = (0..6)
                    .filter(|&c| items.iter().filter(|&&(ic, iy)| ic == c && iy == yr).count() >= 3)
                    .count();
                prop_assert_eq!(d[&yr].active, active);
                prop_assert!((d[&yr].micro_diversity - active as f64 / 6.0 / maps[&yr] as f64).abs() < 1e-15);
            }
        }
    }
}

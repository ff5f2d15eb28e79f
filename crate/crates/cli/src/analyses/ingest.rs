use std::collections::BTreeMap;

use serde::Serialize;

use super::{emit, Analysis};
use crate::context::Context;
use crate::error::Result;

pub struct Ingest;

#[derive(Serialize)]
struct Summary {
    records: usize,
    rejected: usize,
    year_range: Option<(i32, i32)>,
    with_mask: usize,
    with_coverage: usize,
    with_domestic_flag: usize,
    creators: usize,
    countries: BTreeMap<String, usize>,
    cities: BTreeMap<String, usize>,
    dangling: Vec<String>,
}

impl Analysis for Ingest {
    fn about(&self) -> &'static str {
        "load and validate metadata, coverage and masks"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let ds = ctx.dataset()?.clone();
        let mut s = Summary {
            records: ds.len(),
            rejected: ctx.skipped.len(),
            year_range: None,
            with_mask: 0,
            with_coverage: 0,
            with_domestic_flag: 0,
            creators: 0,
            countries: BTreeMap::new(),
            cities: BTreeMap::new(),
            dangling: ds.check_references(None, None).iter().map(|d| format!("{d:?}")).collect(),
        };
        let mut creators = std::collections::BTreeSet::new();
        for r in ds.records.values() {
            s.year_range = Some(match s.year_range {
                None => (r.year, r.year),
                Some((a, b)) => (a.min(r.year), b.max(r.year)),
            });
            s.with_mask += usize::from(r.mask_path.is_some());
            s.with_coverage += usize::from(!r.coverage.is_empty());
            s.with_domestic_flag += usize::from(r.domestic.is_some());
            creators.extend(r.creators.iter().cloned());
            if let Some(c) = &r.pub_country {
                *s.countries.entry(c.clone()).or_default() += 1;
            }
            if let Some(c) = &r.pub_city {
                *s.cities.entry(c.clone()).or_default() += 1;
            }
        }
        s.creators = creators.len();
        for d in s.dangling.clone() {
            ctx.note(format!("dangling reference: {d}"));
        }
        emit(ctx, name, &ctx.cfg.dataset.clone(), &s)?;
        Ok(())
    }
}

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use super::{emit, Analysis, PIPELINE};
use crate::context::Context;
use crate::error::{CliError, Result};
use crate::provenance::read_result;

pub struct Report;

#[derive(Serialize)]
struct Aggregate {
    analyses: BTreeMap<String, Value>,
    missing: Vec<String>,
}

impl Analysis for Report {
    fn about(&self) -> &'static str {
        "aggregate every analysis output into one JSON document"
    }

    fn run(&self, name: &str, ctx: &mut Context) -> Result<()> {
        let mut agg = Aggregate {
            analyses: BTreeMap::new(),
            missing: Vec::new(),
        };
        for step in PIPELINE.iter().filter(|&&s| s != name) {
            let file = format!("{step}.json");
            let path = ctx.out(&file);
            if !path.exists() {
                agg.missing.push(step.to_string());
                continue;
            }
            ctx.track(file, &path)?;
            let mut v: Value = read_result(&path)?;
            if *step == "mapels" {
                // per-mapel features stay in mapels.json
                let n = v["mapels"].as_array().map_or(0, Vec::len);
                v = serde_json::json!({ "mapels": n, "skipped": v["skipped"].take() });
            }
            agg.analyses.insert(step.to_string(), v);
        }
        if agg.analyses.is_empty() {
            return Err(CliError::MissingInput {
                what: "analysis outputs".into(),
                step: "ingest",
            });
        }
        emit(ctx, name, &(), &agg)?;
        Ok(())
    }
}

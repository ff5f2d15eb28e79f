use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::detections::DetectionSet;
use super::embeddings::EmbeddingTable;
use super::metadata::MapRecord;
use crate::rng::rng_from;

/// Variables a corpus can be stratified on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrataVar {
    Year,
    /// `log10` of the scale denominator.
    Scale,
    Country,
    City,
    Creator,
}

impl StrataVar {
    pub fn is_continuous(self) -> bool {
        matches!(self, StrataVar::Year | StrataVar::Scale)
    }

    pub fn name(self) -> &'static str {
        match self {
            StrataVar::Year => "year",
            StrataVar::Scale => "scale",
            StrataVar::Country => "country",
            StrataVar::City => "city",
            StrataVar::Creator => "creator",
        }
    }
}

impl std::str::FromStr for StrataVar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "year" => StrataVar::Year,
            "scale" => StrataVar::Scale,
            "country" => StrataVar::Country,
            "city" => StrataVar::City,
            "creator" => StrataVar::Creator,
            other => return Err(format!("unknown stratification `{other}`")),
        })
    }
}

/// Value of a record on a stratification variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StratumKey {
    Continuous(f64),
    Category(String),
}

/// A cross reference that does not resolve to a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DanglingRef {
    MissingMask { map_id: String },
    Embedding { id: String },
    Detection { map_id: String },
}

/// An immutable, assembled corpus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: BTreeMap<String, MapRecord>,
}

impl Dataset {
    pub fn new(records: BTreeMap<String, MapRecord>) -> Self {
        Self { records }
    }

    pub fn from_records(records: impl IntoIterator<Item = MapRecord>) -> Self {
        Self::new(records.into_iter().map(|r| (r.map_id.clone(), r)).collect())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, map_id: &str) -> Option<&MapRecord> {
        self.records.get(map_id)
    }

    /// Keys of a record on `var`; creators yield one key each, missing
    /// values yield none.
    pub fn stratum_keys(record: &MapRecord, var: StrataVar) -> Vec<StratumKey> {
        match var {
            StrataVar::Year => vec![StratumKey::Continuous(record.year as f64)],
            StrataVar::Scale => record
                .scale_denominator
                .map(|s| StratumKey::Continuous(s.log10()))
                .into_iter()
                .collect(),
            StrataVar::Country => record
                .pub_country
                .clone()
                .map(StratumKey::Category)
                .into_iter()
                .collect(),
            StrataVar::City => record
                .pub_city
                .clone()
                .map(StratumKey::Category)
                .into_iter()
                .collect(),
            StrataVar::Creator => record
                .creators
                .iter()
                .cloned()
                .map(StratumKey::Category)
                .collect(),
        }
    }

    /// Report every reference that does not resolve: masks missing on disk,
    /// embedding ids whose map part (before `:`) is unknown, detections for
    /// unknown maps.
    pub fn check_references(
        &self,
        embeddings: Option<&EmbeddingTable>,
        detections: Option<&BTreeMap<String, DetectionSet>>,
    ) -> Vec<DanglingRef> {
        let mut out = Vec::new();
        for r in self.records.values() {
            if let Some(p) = &r.mask_path {
                if !p.exists() {
                    out.push(DanglingRef::MissingMask {
                        map_id: r.map_id.clone(),
                    });
                }
            }
        }
        if let Some(t) = embeddings {
            for id in t.ids() {
                let map_part = id.split(':').next().unwrap_or(id);
                if !self.records.contains_key(map_part) {
                    out.push(DanglingRef::Embedding { id: id.clone() });
                }
            }
        }
        if let Some(d) = detections {
            for map_id in d.keys() {
                if !self.records.contains_key(map_id) {
                    out.push(DanglingRef::Detection {
                        map_id: map_id.clone(),
                    });
                }
            }
        }
        out
    }

    /// Keep at most `cap` records per `group_id`; ungrouped records are
    /// always kept. Selection is a seeded shuffle within each group.
    pub fn cap_groups(&self, cap: usize, seed: u64) -> Dataset {
        let mut groups: BTreeMap<&str, Vec<&MapRecord>> = BTreeMap::new();
        let mut keep: BTreeSet<String> = BTreeSet::new();
        for r in self.records.values() {
            match &r.group_id {
                Some(g) => groups.entry(g.as_str()).or_default().push(r),
                None => {
                    keep.insert(r.map_id.clone());
                }
            }
        }
        for (gi, (_, mut members)) in groups.into_iter().enumerate() {
            if members.len() > cap {
                let mut rng = rng_from(crate::rng::derive_seed(seed, gi as u64));
                members.shuffle(&mut rng);
                members.truncate(cap);
            }
            keep.extend(members.into_iter().map(|r| r.map_id.clone()));
        }
        Dataset::new(
            self.records
                .iter()
                .filter(|(k, _)| keep.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dangling_references_are_reported() {
        let ds = Dataset::from_records([MapRecord::new("a", "a.png", 1800)]);
        let emb = EmbeddingTable::new(1, vec!["a:0".into(), "b:1".into()], vec![0.0, 1.0]).unwrap();
        let det = BTreeMap::from([("zz".to_string(), DetectionSet::default())]);
        let refs = ds.check_references(Some(&emb), Some(&det));
        assert_eq!(
            refs,
            vec![
                DanglingRef::Embedding { id: "b:1".into() },
                DanglingRef::Detection { map_id: "zz".into() }
            ]
        );
    }

    #[test]
    fn group_cap_is_deterministic() {
        let recs = (0..10).map(|i| {
            let mut r = MapRecord::new(format!("m{i}"), "x.png", 1800);
            if i < 8 {
                r.group_id = Some("atlas".into());
            }
            r
        });
        let ds = Dataset::from_records(recs);
        let a = ds.cap_groups(3, 42);
        assert_eq!(a.len(), 5);
        assert_eq!(a, ds.cap_groups(3, 42));
    }
}

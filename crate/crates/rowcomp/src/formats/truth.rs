//! Ground truth per benchmark table:
//! `{"subjects": [...], "fills": {"r,c": "value"}, "seeds": n}`.
//! Fill rows are 0-based indices into the full table.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rowcomp_core::kb::EntityId;
use rowcomp_core::metrics::GroundTruth;
use serde::Deserialize;

use super::{read, FormatError};

#[derive(Debug, Clone, PartialEq)]
pub struct TruthFile {
    pub truth: GroundTruth,
    /// Seed rows for this table, overriding the configured count.
    pub seeds: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    #[serde(default)]
    subjects: Vec<String>,
    #[serde(default)]
    fills: BTreeMap<String, String>,
    seeds: Option<usize>,
}

pub fn load_truth(path: &Path) -> Result<TruthFile, FormatError> {
    parse_truth(&read(path)?).map_err(|e| e.in_file(path))
}

pub fn parse_truth(text: &str) -> Result<TruthFile, FormatError> {
    let raw: Raw = serde_json::from_str(text).map_err(|e| FormatError {
        line: Some(e.line()),
        ..FormatError::new(e.to_string())
    })?;
    let mut fills = BTreeMap::new();
    for (key, value) in raw.fills {
        let cell = key
            .split_once(',')
            .and_then(|(r, c)| Some((r.trim().parse().ok()?, c.trim().parse().ok()?)))
            .ok_or_else(|| FormatError::new(format!("fill key {key:?} is not \"row,column\"")))?;
        fills.insert(cell, value);
    }
    let additional_subjects: BTreeSet<EntityId> = raw.subjects.into_iter().map(EntityId::from).collect();
    Ok(TruthFile {
        truth: GroundTruth {
            additional_subjects,
            fills,
        },
        seeds: raw.seeds,
    })
}

//! Table interpretation: linking main-column cells to entities and
//! non-main columns to properties.

mod cell;
mod outliers;
mod scores;
mod table;


use alloc::collections::BTreeSet;
use alloc::vec::Vec;

pub use cell::{column_is_numeric, is_numeric_cell, matches_object, parse_quantity, quantities_match};
pub use outliers::{isolation_scores, quantile, IsolationForestParams, OutlierRemover};
pub use scores::{
    characteristic_range, missing_property_score, numeric_approx_score, numeric_exact_score, render_object,
    string_approx_score, string_exact_score, CharacteristicRange, Scorer,
};
pub use table::{LinkedTable, Table, TableError};

use crate::embed::{normalized_levenshtein, EmbeddingIndex};
use crate::kb::{EntityId, KnowledgeBase, PropertyId};
use crate::text::normalize;

/// Minimum column score needed to accept a property link.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ThresholdPolicy {
    /// `⌈0.5 · linked rows⌉`.
    #[default]
    Majority,
    Fixed(f64),
}

impl ThresholdPolicy {
    pub fn resolve(self, linked_rows: usize) -> f64 {
        match self {
            ThresholdPolicy::Majority => libm::ceil(0.5 * linked_rows as f64),
            ThresholdPolicy::Fixed(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    /// Maximum normalised edit distance for a fuzzy match.
    pub fuzzy_threshold: f64,
    /// Relative tolerance for numeric equality after unit conversion.
    pub numeric_tolerance: f64,
    pub remover: OutlierRemover,
    /// Fewest values a characteristic range is built from.
    pub min_support: usize,
    /// Neighbours consulted by the missing-property estimate.
    pub n_neighbors: usize,
    pub threshold: ThresholdPolicy,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            fuzzy_threshold: 0.2,
            numeric_tolerance: 1e-9,
            remover: OutlierRemover::default(),
            min_support: 3,
            n_neighbors: 10,
            threshold: ThresholdPolicy::Majority,
        }
    }
}

/// Why a column could not be linked ("cannot resolve confidently").
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinkFailure {
    #[error("column index out of range")]
    InvalidColumn,
    #[error("no linked entity has any property")]
    NoCandidates,
    #[error("several properties share the top score {score}")]
    Tie { properties: Vec<PropertyId>, score: f64 },
    #[error("best property {best} scores {score}, below threshold {threshold}")]
    BelowThreshold { best: PropertyId, score: f64, threshold: f64 },
}

impl LinkFailure {
    pub fn kind(&self) -> &'static str {
        match self {
            LinkFailure::InvalidColumn => "invalid-column",
            LinkFailure::NoCandidates => "no-candidates",
            LinkFailure::Tie { .. } => "tie",
            LinkFailure::BelowThreshold { .. } => "below-threshold",
        }
    }
}

/// Links one main-column cell: a unique exact label/alias match, else a
/// unique fuzzy match within `fuzzy_threshold`, else `None`.
pub fn link_cell(kb: &KnowledgeBase, cell: &str, fuzzy_threshold: f64) -> Option<EntityId> {
    let key = normalize(cell);
    if key.is_empty() {
        return None;
    }
    let exact = kb.resolve_label(&key);
    match exact.len() {
        1 => return exact.into_iter().next(),
        0 => {}
        _ => return None,
    }
    let len = key.chars().count();
    let mut fuzzy: BTreeSet<&EntityId> = BTreeSet::new();
    for (label, ids) in kb.label_index() {
        let other = label.chars().count();
        // length gap alone already bounds the normalised distance from below
        if len.abs_diff(other) as f64 > fuzzy_threshold * len.max(other) as f64 {
            continue;
        }
        if normalized_levenshtein(&key, label) <= fuzzy_threshold {
            fuzzy.extend(ids);
            if fuzzy.len() > 1 {
                return None;
            }
        }
    }
    fuzzy.into_iter().next().cloned()
}

/// Links every main-column cell; columns are left unlinked.
pub fn link_main_column(kb: &KnowledgeBase, table: &Table, fuzzy_threshold: f64) -> LinkedTable {
    let main = table
        .column(0)
        .map(|cell| link_cell(kb, cell, fuzzy_threshold))
        .collect();
    LinkedTable::unlinked_columns(table.clone(), main)
}

/// Properties held by at least one linked entity.
pub fn candidate_properties(kb: &KnowledgeBase, main: &[Option<EntityId>]) -> BTreeSet<PropertyId> {
    main.iter()
        .flatten()
        .flat_map(|e| kb.properties_of(e).cloned())
        .collect()
}

/// Properties of `scores` attaining the maximum value.
fn argmax(scores: &[(PropertyId, f64)]) -> (Vec<PropertyId>, f64) {
    let best = scores.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let ps = scores
        .iter()
        .filter(|(_, s)| *s == best)
        .map(|(p, _)| p.clone())
        .collect();
    (ps, best)
}

/// Links column `j` to a property.
///
/// Exact scores are summed per candidate property; a unique maximum at or
/// above `threshold` wins. Otherwise the tied leaders get approximate
/// scores added on rows where their exact score was 0, and the test is
/// repeated. The column is scored as numeric iff at least half of its
/// non-empty cells parse as numbers.
pub fn link_column(
    kb: &KnowledgeBase,
    idx: Option<&EmbeddingIndex>,
    table: &Table,
    main: &[Option<EntityId>],
    j: usize,
    threshold: f64,
    config: &LinkConfig,
) -> Result<PropertyId, LinkFailure> {
    if j == 0 || j >= table.n_cols() || main.len() != table.n_rows() {
        return Err(LinkFailure::InvalidColumn);
    }
    let candidates = candidate_properties(kb, main);
    if candidates.is_empty() {
        return Err(LinkFailure::NoCandidates);
    }
    let numeric = column_is_numeric(table.column(j));
    let scorer = Scorer::new(kb, idx, table, main, config);
    let rows = 0..table.n_rows();

    let exact: Vec<(PropertyId, Vec<f64>)> = candidates
        .into_iter()
        .map(|p| {
            let per_row = rows.clone().map(|i| scorer.exact(numeric, i, j, &p)).collect();
            (p, per_row)
        })
        .collect();
    let sums: Vec<(PropertyId, f64)> = exact
        .iter()
        .map(|(p, per_row)| (p.clone(), per_row.iter().sum()))
        .collect();
    let (leaders, best) = argmax(&sums);
    if let [p] = leaders.as_slice() {
        if best >= threshold {
            return Ok(p.clone());
        }
    }

    let adjusted: Vec<(PropertyId, f64)> = exact
        .iter()
        .filter(|(p, _)| leaders.contains(p))
        .map(|(p, per_row)| {
            let n: f64 = per_row.iter().sum();
            let n_approx: f64 = per_row
                .iter()
                .enumerate()
                .filter(|(_, s)| **s == 0.0)
                .map(|(i, _)| scorer.approx(numeric, i, j, p))
                .sum();
            (p.clone(), n + n_approx)
        })
        .collect();
    let (leaders, best) = argmax(&adjusted);
    match leaders.as_slice() {
        [p] if best >= threshold => Ok(p.clone()),
        [p] => Err(LinkFailure::BelowThreshold {
            best: p.clone(),
            score: best,
            threshold,
        }),
        _ => Err(LinkFailure::Tie {
            properties: leaders,
            score: best,
        }),
    }
}

/// Links the main column, then every other column; failed columns map to
/// `None` with the reason kept in `link_failures`.
pub fn link_table(kb: &KnowledgeBase, idx: Option<&EmbeddingIndex>, table: &Table, config: &LinkConfig) -> LinkedTable {
    let mut linked = link_main_column(kb, table, config.fuzzy_threshold);
    relink_columns(kb, idx, &mut linked, config);
    linked
}

/// Recomputes every column link of `linked` from its main column.
pub fn relink_columns(kb: &KnowledgeBase, idx: Option<&EmbeddingIndex>, linked: &mut LinkedTable, config: &LinkConfig) {
    let threshold = config.threshold.resolve(linked.linked_rows().count());
    linked.column_links.clear();
    linked.link_failures.clear();
    for j in 1..linked.n_cols() {
        match link_column(kb, idx, &linked.table, &linked.main_column, j, threshold, config) {
            Ok(p) => {
                linked.column_links.insert(j, Some(p));
            }
            Err(f) => {
                linked.column_links.insert(j, None);
                linked.link_failures.insert(j, f);
            }
        }
    }
}

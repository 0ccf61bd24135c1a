//! Per-cell property scores used by column linking.
//!
//! Each column is scored either as numeric or as string. The exact score is
//! an indicator that the cell agrees with the row entity's property value;
//! the approximate score is consulted only where the exact score is 0.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cell::RefCell;

use super::cell::{matches_object, parse_quantity};
use super::outliers::OutlierRemover;
use super::table::Table;
use super::LinkConfig;
use crate::embed::{normalized_levenshtein, EmbeddingIndex};
use crate::kb::{EntityId, KnowledgeBase, ObjectValue, PropertyId, Quantity, Unit};
use crate::text::normalize;

/// `[low, high]` of a numeric property over the entities of one type,
/// after outlier removal. Bounds are expressed in `unit`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicRange {
    pub property: PropertyId,
    pub ty: EntityId,
    pub low: f64,
    pub high: f64,
    pub unit: Option<Unit>,
}

impl CharacteristicRange {
    /// A unitless value is read in the range's unit.
    pub fn contains(&self, q: &Quantity) -> bool {
        let v = match q.unit {
            None => Some(q.value),
            Some(_) => q.in_unit(self.unit),
        };
        v.is_some_and(|v| self.low <= v && v <= self.high)
    }
}

/// Characteristic range of `p` for type `ty`, or `None` with fewer than
/// `min_support` numeric values. Values are converted to the most common
/// unit among them; values of another dimension are ignored.
pub fn characteristic_range(
    kb: &KnowledgeBase,
    p: &PropertyId,
    ty: &EntityId,
    remover: &OutlierRemover,
    min_support: usize,
) -> Option<CharacteristicRange> {
    let quantities: Vec<&Quantity> = kb
        .direct_members(ty)
        .iter()
        .filter_map(|e| kb.get(e, p).and_then(ObjectValue::as_quantity))
        .collect();
    let mut unit_counts: BTreeMap<Option<Unit>, usize> = BTreeMap::new();
    for q in &quantities {
        *unit_counts.entry(q.unit).or_default() += 1;
    }
    let unit = unit_counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(u, _)| *u)?;
    let values: Vec<f64> = quantities.iter().filter_map(|q| q.in_unit(unit)).collect();
    if values.len() < min_support.max(1) {
        return None;
    }
    let kept = remover.retain(&values);
    let low = kept.iter().copied().reduce(f64::min)?;
    let high = kept.iter().copied().reduce(f64::max)?;
    Some(CharacteristicRange {
        property: p.clone(),
        ty: ty.clone(),
        low,
        high,
        unit,
    })
}

/// Likelihood that `e` is missing `p` only by omission, estimated from its
/// `n_neighbors` nearest type-sharing neighbours under Euclidean distance.
///
/// Each neighbour votes +1 if it has `p` and −1 otherwise, weighted by
/// `1 − d / d_max`; the mean vote is clamped to `[0, 1]`. Returns 0 when `e`
/// has no embedding or no type-sharing neighbour.
pub fn missing_property_score(
    kb: &KnowledgeBase,
    idx: &EmbeddingIndex,
    e: &EntityId,
    p: &PropertyId,
    n_neighbors: usize,
) -> f64 {
    let types = kb.direct_types(e);
    if types.is_empty() {
        return 0.0;
    }
    let shares_type = |x: &EntityId| kb.direct_types(x).iter().any(|t| types.contains(t));
    let neighbors = match idx.nearest_euclidean(e, n_neighbors, shares_type) {
        Ok(n) if !n.is_empty() => n,
        _ => return 0.0,
    };
    let max = neighbors.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    let total: f64 = neighbors
        .iter()
        .map(|(x, d)| {
            // all neighbours coincide with e: treat them as fully similar
            let sim = if max > 0.0 { 1.0 - d / max } else { 1.0 };
            if kb.has_property(x, p) {
                sim
            } else {
                -sim
            }
        })
        .sum();
    (total / neighbors.len() as f64).clamp(0.0, 1.0)
}

/// Text form of a KB object for fuzzy comparison. Entities yield their
/// label followed by their aliases.
pub fn render_object(kb: &KnowledgeBase, o: &ObjectValue) -> Vec<alloc::string::String> {
    use alloc::string::ToString;
    match o {
        ObjectValue::Entity(e) => match kb.entity(e) {
            Some(r) => core::iter::once(&r.label).chain(&r.aliases).cloned().collect(),
            None => alloc::vec![e.to_string()],
        },
        ObjectValue::Number(q) => alloc::vec![q.to_string()],
        ObjectValue::Text(s) | ObjectValue::Time(s) => alloc::vec![s.clone()],
    }
}

/// Scores cells of one table against one knowledge base, caching
/// characteristic ranges.
pub struct Scorer<'a> {
    pub kb: &'a KnowledgeBase,
    pub idx: Option<&'a EmbeddingIndex>,
    pub table: &'a Table,
    pub main: &'a [Option<EntityId>],
    pub config: &'a LinkConfig,
    ranges: RefCell<BTreeMap<(PropertyId, EntityId), Option<CharacteristicRange>>>,
}

impl<'a> Scorer<'a> {
    pub fn new(
        kb: &'a KnowledgeBase,
        idx: Option<&'a EmbeddingIndex>,
        table: &'a Table,
        main: &'a [Option<EntityId>],
        config: &'a LinkConfig,
    ) -> Self {
        Self {
            kb,
            idx,
            table,
            main,
            config,
            ranges: RefCell::new(BTreeMap::new()),
        }
    }

    fn subject(&self, i: usize) -> Option<&'a EntityId> {
        self.main.get(i).and_then(Option::as_ref)
    }

    pub fn range(&self, p: &PropertyId, ty: &EntityId) -> Option<CharacteristicRange> {
        self.ranges
            .borrow_mut()
            .entry((p.clone(), ty.clone()))
            .or_insert_with(|| characteristic_range(self.kb, p, ty, &self.config.remover, self.config.min_support))
            .clone()
    }

    pub fn numeric_exact(&self, i: usize, j: usize, p: &PropertyId) -> f64 {
        let (Some(e), Some(cell)) = (self.subject(i), parse_quantity(self.table.cell(i, j))) else {
            return 0.0;
        };
        let hit = self
            .kb
            .get(e, p)
            .is_some_and(|o| matches_object(&cell, o, self.config.numeric_tolerance));
        indicator(hit)
    }

    pub fn numeric_approx(&self, i: usize, j: usize, p: &PropertyId) -> f64 {
        let (Some(e), Some(cell)) = (self.subject(i), parse_quantity(self.table.cell(i, j))) else {
            return 0.0;
        };
        let hit = self
            .kb
            .direct_types(e)
            .iter()
            .any(|ty| self.range(p, ty).is_some_and(|r| r.contains(&cell)));
        indicator(hit)
    }

    pub fn string_exact(&self, i: usize, j: usize, p: &PropertyId) -> f64 {
        let Some(e) = self.subject(i) else { return 0.0 };
        let cell = normalize(self.table.cell(i, j));
        if cell.is_empty() {
            return 0.0;
        }
        let hit = self.kb.get(e, p).is_some_and(|o| {
            render_object(self.kb, o)
                .iter()
                .any(|text| normalized_levenshtein(&normalize(text), &cell) <= self.config.fuzzy_threshold)
        });
        indicator(hit)
    }

    /// Missing-property likelihood where the row entity lacks `p`; 0 when
    /// it has `p`, the row is unlinked, or the cell is empty.
    pub fn string_approx(&self, i: usize, j: usize, p: &PropertyId) -> f64 {
        let (Some(e), Some(idx)) = (self.subject(i), self.idx) else {
            return 0.0;
        };
        if self.table.cell(i, j).trim().is_empty() || self.kb.has_property(e, p) {
            return 0.0;
        }
        missing_property_score(self.kb, idx, e, p, self.config.n_neighbors)
    }

    pub fn exact(&self, numeric: bool, i: usize, j: usize, p: &PropertyId) -> f64 {
        if numeric {
            self.numeric_exact(i, j, p)
        } else {
            self.string_exact(i, j, p)
        }
    }

    pub fn approx(&self, numeric: bool, i: usize, j: usize, p: &PropertyId) -> f64 {
        if numeric {
            self.numeric_approx(i, j, p)
        } else {
            self.string_approx(i, j, p)
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// 1 iff the cell equals `p(L_i)` within unit conversion.
pub fn numeric_exact_score(
    kb: &KnowledgeBase,
    main: &[Option<EntityId>],
    table: &Table,
    i: usize,
    j: usize,
    p: &PropertyId,
    config: &LinkConfig,
) -> f64 {
    Scorer::new(kb, None, table, main, config).numeric_exact(i, j, p)
}

/// 1 iff the cell lies in the characteristic range of `p` for some type of `L_i`.
pub fn numeric_approx_score(
    kb: &KnowledgeBase,
    main: &[Option<EntityId>],
    table: &Table,
    i: usize,
    j: usize,
    p: &PropertyId,
    config: &LinkConfig,
) -> f64 {
    Scorer::new(kb, None, table, main, config).numeric_approx(i, j, p)
}

/// 1 iff the rendered `p(L_i)` fuzzily equals the cell.
pub fn string_exact_score(
    kb: &KnowledgeBase,
    main: &[Option<EntityId>],
    table: &Table,
    i: usize,
    j: usize,
    p: &PropertyId,
    config: &LinkConfig,
) -> f64 {
    Scorer::new(kb, None, table, main, config).string_exact(i, j, p)
}

#[allow(clippy::too_many_arguments)]
pub fn string_approx_score(
    kb: &KnowledgeBase,
    idx: &EmbeddingIndex,
    main: &[Option<EntityId>],
    table: &Table,
    i: usize,
    j: usize,
    p: &PropertyId,
    config: &LinkConfig,
) -> f64 {
    Scorer::new(kb, Some(idx), table, main, config).string_approx(i, j, p)
}

//! Ranked-retrieval metrics for subject suggestion and gap filling.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::kb::EntityId;
use crate::text::normalize;

/// Expected output for one benchmark table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub additional_subjects: BTreeSet<EntityId>,
    /// `(row, column)` to expected cell text.
    pub fills: BTreeMap<(usize, usize), String>,
}

/// `|top-N ∩ truth| / |truth|`, or 1 when `truth` is empty. Repeated items
/// in `ranked` count once.
pub fn recall_at_n<T: Ord>(ranked: &[T], truth: &BTreeSet<T>, n: usize) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let hits: BTreeSet<&T> = ranked.iter().take(n).filter(|x| truth.contains(*x)).collect();
    hits.len() as f64 / truth.len() as f64
}

/// Mean of precision-at-rank over truth items, with unretrieved items
/// contributing 0. An empty truth set gives 1. Ranks are raw list
/// positions, as in [`recall_at_n`]; a repeated hit scores only once.
pub fn average_precision<T: Ord>(ranked: &[T], truth: &BTreeSet<T>) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let mut seen: BTreeSet<&T> = BTreeSet::new();
    let mut sum = 0.0;
    for (rank, x) in ranked.iter().enumerate() {
        if truth.contains(x) && seen.insert(x) {
            sum += seen.len() as f64 / (rank + 1) as f64;
        }
    }
    sum / truth.len() as f64
}

/// Mean of `average_precision` over tables; 0 for no tables.
pub fn mean_average_precision<T: Ord>(tables: &[(Vec<T>, BTreeSet<T>)]) -> f64 {
    mean(tables.iter().map(|(r, t)| average_precision(r, t)))
}

/// Arithmetic mean; 0 for an empty iterator.
pub fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Population standard deviation; 0 for fewer than two values.
pub fn population_stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    libm::sqrt(mean(xs.iter().map(|x| (x - m) * (x - m))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
}

/// Cell-level precision and recall at `k`.
///
/// A cell is correct when one of its first `k` values matches the truth
/// after normalisation. Precision divides by cells with at least one fill
/// (1 when there are none); recall divides by cells with truth (1 when
/// there are none).
pub fn fill_precision_recall_at_k<V: AsRef<str>>(
    fills: &BTreeMap<(usize, usize), Vec<V>>,
    truth: &BTreeMap<(usize, usize), String>,
    k: usize,
) -> PrecisionRecall {
    let filled = fills.values().filter(|v| !v.is_empty()).count();
    let correct = fills
        .iter()
        .filter(|(cell, values)| {
            truth.get(cell).is_some_and(|t| {
                let t = normalize(t);
                values.iter().take(k).any(|v| normalize(v.as_ref()) == t)
            })
        })
        .count();
    PrecisionRecall {
        precision: if filled == 0 { 1.0 } else { correct as f64 / filled as f64 },
        recall: if truth.is_empty() {
            1.0
        } else {
            correct as f64 / truth.len() as f64
        },
    }
}

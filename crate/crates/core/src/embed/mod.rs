//! Entity embedding index with exact nearest-neighbour search, plus the
//! string-distance utilities used as ranking features.

mod label;
mod strings;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

pub(crate) use label::bucket as hash_bucket;
pub use label::{HashedNgramEmbedder, LabelEmbedder, PretrainedLabelEmbedder};
pub use strings::{levenshtein, normalized_levenshtein};

use crate::kb::EntityId;
use crate::vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// TransE-style spaces.
    #[default]
    Cosine,
    /// ComplEx / DistMult-style spaces.
    Dot,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Dot => "dot",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cosine" | "cos" => Ok(Metric::Cosine),
            "dot" | "dot-product" | "dot_product" => Ok(Metric::Dot),
            _ => Err(EmbeddingError::UnknownMetric(s.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("vector for {id} has {found} components, expected {expected}")]
    DimensionMismatch { id: EntityId, expected: usize, found: usize },
    #[error("vector for {0} has a non-finite component")]
    NonFinite(EntityId),
    #[error("entity {0} listed twice")]
    Duplicate(EntityId),
    #[error("entity {0} is not in the index")]
    Missing(EntityId),
    #[error("unknown metric {0:?}")]
    UnknownMetric(alloc::string::String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub entity: EntityId,
    /// Higher is closer under the index metric.
    pub similarity: f64,
}

/// Immutable map from entity to a fixed-length vector. Rows are stored in
/// id order, so ties in similarity resolve to the smaller id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingIndex {
    dim: usize,
    metric: Metric,
    ids: Vec<EntityId>,
    data: Vec<f64>,
    norms: Vec<f64>,
    positions: BTreeMap<EntityId, usize>,
}

impl EmbeddingIndex {
    pub fn new(dim: usize, metric: Metric, rows: Vec<(EntityId, Vec<f64>)>) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        let mut rows = rows;
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        let mut ids = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        let mut norms = Vec::with_capacity(rows.len());
        let mut positions = BTreeMap::new();
        for (id, v) in rows {
            if v.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    id,
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite(id));
            }
            if positions.insert(id.clone(), ids.len()).is_some() {
                return Err(EmbeddingError::Duplicate(id));
            }
            norms.push(vector::norm(&v));
            data.extend_from_slice(&v);
            ids.push(id);
        }
        Ok(Self {
            dim,
            metric,
            ids,
            data,
            norms,
            positions,
        })
    }

    pub fn empty(dim: usize, metric: Metric) -> Self {
        Self {
            dim,
            metric,
            ids: Vec::new(),
            data: Vec::new(),
            norms: Vec::new(),
            positions: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, e: &EntityId) -> bool {
        self.positions.contains_key(e)
    }

    pub fn ids(&self) -> &[EntityId] {
        &self.ids
    }

    pub fn vector(&self, e: &EntityId) -> Option<&[f64]> {
        self.positions.get(e).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn position(&self, e: &EntityId) -> Result<usize, EmbeddingError> {
        self.positions
            .get(e)
            .copied()
            .ok_or_else(|| EmbeddingError::Missing(e.clone()))
    }

    fn sim_at(&self, i: usize, j: usize) -> f64 {
        let d = vector::dot(self.row(i), self.row(j));
        match self.metric {
            Metric::Dot => d,
            Metric::Cosine => {
                let denom = self.norms[i] * self.norms[j];
                if denom == 0.0 {
                    0.0
                } else {
                    (d / denom).clamp(-1.0, 1.0)
                }
            }
        }
    }

    /// Cosine similarity or dot product, per the index metric.
    pub fn similarity(&self, a: &EntityId, b: &EntityId) -> Result<f64, EmbeddingError> {
        Ok(self.sim_at(self.position(a)?, self.position(b)?))
    }

    /// Metric-consistent distance: `1 - cos` for cosine, `-dot` for dot product.
    pub fn distance(&self, a: &EntityId, b: &EntityId) -> Result<f64, EmbeddingError> {
        let s = self.similarity(a, b)?;
        Ok(match self.metric {
            Metric::Cosine => 1.0 - s,
            Metric::Dot => -s,
        })
    }

    pub fn euclidean(&self, a: &EntityId, b: &EntityId) -> Result<f64, EmbeddingError> {
        Ok(vector::euclidean(
            self.row(self.position(a)?),
            self.row(self.position(b)?),
        ))
    }

    /// The `k` most similar other entities, by descending similarity with
    /// ties broken by ascending id.
    pub fn nearest_neighbors(&self, e: &EntityId, k: usize) -> Result<Vec<Neighbor>, EmbeddingError> {
        let q = self.position(e)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        let scored = (0..self.len()).filter(|&i| i != q).map(|i| (i, self.sim_at(q, i)));
        let top = select_top(scored, k, |a, b| b.total_cmp(a));
        Ok(top
            .into_iter()
            .map(|(i, similarity)| Neighbor {
                entity: self.ids[i].clone(),
                similarity,
            })
            .collect())
    }

    /// The `k` closest other entities accepted by `keep`, under Euclidean
    /// distance (ascending, ties by id). Returns `(entity, distance)`.
    pub fn nearest_euclidean<F>(&self, e: &EntityId, k: usize, keep: F) -> Result<Vec<(EntityId, f64)>, EmbeddingError>
    where
        F: Fn(&EntityId) -> bool,
    {
        let q = self.position(e)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        let qv = self.row(q);
        let scored = (0..self.len())
            .filter(|&i| i != q && keep(&self.ids[i]))
            .map(|i| (i, vector::euclidean(qv, self.row(i))));
        let top = select_top(scored, k, |a, b| a.total_cmp(b));
        Ok(top.into_iter().map(|(i, d)| (self.ids[i].clone(), d)).collect())
    }
}

/// Keeps the best `k` of `(position, score)` under `order` (best first),
/// breaking ties by position.
fn select_top<I, F>(scored: I, k: usize, order: F) -> Vec<(usize, f64)>
where
    I: Iterator<Item = (usize, f64)>,
    F: Fn(&f64, &f64) -> Ordering,
{
    let mut all: Vec<(usize, f64)> = scored.collect();
    let cmp = |a: &(usize, f64), b: &(usize, f64)| order(&a.1, &b.1).then(a.0.cmp(&b.0));
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, cmp);
        all.truncate(k);
    }
    all.sort_by(cmp);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn planar(metric: Metric) -> EmbeddingIndex {
        EmbeddingIndex::new(
            2,
            metric,
            vec![
                ("a".into(), vec![1.0, 0.0]),
                ("b".into(), vec![1.0, 1.0]),
                ("c".into(), vec![0.0, 1.0]),
                ("d".into(), vec![-1.0, 0.2]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn cosine_order_matches_hand_computation() {
        // cos(a,b)=0.7071, cos(a,c)=0, cos(a,d)=-0.9806
        let idx = planar(Metric::Cosine);
        let got: Vec<_> = idx
            .nearest_neighbors(&"a".into(), 3)
            .unwrap()
            .into_iter()
            .map(|n| n.entity.as_str().to_owned())
            .collect();
        assert_eq!(got, ["b", "c", "d"]);
        // from c: cos(c,b)=0.7071, cos(c,d)=0.1961, cos(c,a)=0
        let got: Vec<_> = idx
            .nearest_neighbors(&"c".into(), 2)
            .unwrap()
            .into_iter()
            .map(|n| n.entity.as_str().to_owned())
            .collect();
        assert_eq!(got, ["b", "d"]);
    }

    use alloc::borrow::ToOwned;

    #[test]
    fn k_zero_and_missing() {
        let idx = planar(Metric::Cosine);
        assert!(idx.nearest_neighbors(&"a".into(), 0).unwrap().is_empty());
        assert_eq!(
            idx.nearest_neighbors(&"zz".into(), 1).unwrap_err(),
            EmbeddingError::Missing("zz".into())
        );
        assert_eq!(idx.nearest_neighbors(&"a".into(), 10).unwrap().len(), 3);
    }

    #[test]
    fn duplicate_vector_ranks_first() {
        let idx = EmbeddingIndex::new(
            2,
            Metric::Cosine,
            vec![
                ("q".into(), vec![0.3, 0.4]),
                ("copy".into(), vec![0.3, 0.4]),
                ("other".into(), vec![0.4, 0.3]),
            ],
        )
        .unwrap();
        let n = idx.nearest_neighbors(&"q".into(), 1).unwrap();
        assert_eq!(n[0].entity.as_str(), "copy");
        assert!((n[0].similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_values() {
        let idx = EmbeddingIndex::new(
            2,
            Metric::Dot,
            vec![("x".into(), vec![1.0, 2.0]), ("y".into(), vec![3.0, 4.0])],
        )
        .unwrap();
        assert_eq!(idx.similarity(&"x".into(), &"y".into()).unwrap(), 11.0);
        assert_eq!(idx.distance(&"x".into(), &"y".into()).unwrap(), -11.0);
        let cos = planar(Metric::Cosine);
        assert!((cos.similarity(&"b".into(), &"b".into()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cos.similarity(&"a".into(), &"c".into()).unwrap(), 0.0);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            EmbeddingIndex::new(2, Metric::Cosine, vec![("a".into(), vec![1.0])]),
            Err(EmbeddingError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            EmbeddingIndex::new(1, Metric::Cosine, vec![("a".into(), vec![f64::INFINITY])]),
            Err(EmbeddingError::NonFinite(_))
        ));
        assert!(matches!(
            EmbeddingIndex::new(1, Metric::Cosine, vec![("a".into(), vec![1.0]), ("a".into(), vec![2.0])]),
            Err(EmbeddingError::Duplicate(_))
        ));
        assert_eq!("dot".parse::<Metric>().unwrap(), Metric::Dot);
        assert!("l1".parse::<Metric>().is_err());
    }

    #[test]
    fn euclidean_neighbours_respect_filter() {
        let idx = planar(Metric::Cosine);
        let got = idx
            .nearest_euclidean(&"a".into(), 2, |e| e.as_str() != "b")
            .unwrap();
        assert_eq!(got[0].0.as_str(), "c");
        assert!((got[0].1 - libm::sqrt(2.0)).abs() < 1e-12);
        assert_eq!(got[1].0.as_str(), "d");
    }
}

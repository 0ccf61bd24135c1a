//! Subject suggestion: candidates from embedding neighbourhoods and LM
//! generations, described by eight features and ranked by an outlier
//! detector.

mod features;
mod generate;
mod rank;

#[cfg(test)]
mod tests;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

pub use features::{FeatureContext, FeatureVector, NO_DISTANCE};
pub use generate::{
    embedding_candidates, generated_subject, lm_candidates, lm_prompt, passes_filters, to_prompt, SeedNeighborhoods,
};
pub use rank::{
    neighborhood_size, normalize_scores, outlier_scores, rank_candidates, raw_row, scale_columns, Detector, RankError,
};

use crate::clients::{ClientError, TextGenerator};
use crate::embed::{EmbeddingIndex, LabelEmbedder};
use crate::interpret::LinkedTable;
use crate::kb::{EntityId, KnowledgeBase};
use crate::metrics::recall_at_n;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CandidateSource {
    Embedding,
    Lm,
    Both,
}

impl CandidateSource {
    pub fn name(self) -> &'static str {
        match self {
            CandidateSource::Embedding => "embedding",
            CandidateSource::Lm => "lm",
            CandidateSource::Both => "both",
        }
    }

    fn merge(self, other: Self) -> Self {
        if self == other {
            self
        } else {
            CandidateSource::Both
        }
    }
}

impl fmt::Display for CandidateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub entity: EntityId,
    pub source: CandidateSource,
    /// Best generation score among the generations naming this entity.
    pub lm_score: Option<f64>,
    pub features: Option<FeatureVector>,
}

impl Candidate {
    pub fn new(entity: EntityId, source: CandidateSource) -> Self {
        Self {
            entity,
            source,
            lm_score: None,
            features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSuggestion {
    pub entity: EntityId,
    /// Normalised detector score in `[0, 1]`; higher ranks first.
    pub score: f64,
    pub source: CandidateSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuggestConfig {
    pub k_per_seed: usize,
    /// Types whose candidates must hold every in-table property.
    pub high_cardinality_types: BTreeSet<EntityId>,
    pub detector: Detector,
    /// Expected outlier share, used only to normalise scores.
    pub contamination: f64,
    pub samples: usize,
    pub temperature: f64,
}

impl Default for SuggestConfig {
    fn default() -> Self {
        Self {
            k_per_seed: 1000,
            high_cardinality_types: [EntityId::new("Q5")].into_iter().collect(),
            detector: Detector::Knn,
            contamination: 0.05,
            samples: 100,
            temperature: 0.7,
        }
    }
}

/// Candidates of both generators, each list in its generator's own order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidatePool {
    pub embedding: Vec<Candidate>,
    pub lm: Vec<Candidate>,
}

impl CandidatePool {
    /// Union of both lists, sorted by id; entities from both lists are
    /// marked [`CandidateSource::Both`] and keep the LM score.
    pub fn combined(&self) -> Vec<Candidate> {
        let mut merged: BTreeMap<EntityId, Candidate> = BTreeMap::new();
        for c in self.embedding.iter().chain(&self.lm) {
            merged
                .entry(c.entity.clone())
                .and_modify(|m| {
                    m.source = m.source.merge(c.source);
                    m.lm_score = m.lm_score.or(c.lm_score);
                })
                .or_insert_with(|| c.clone());
        }
        merged.into_values().collect()
    }

    /// Entities an `n`-per-generator budget yields: the union of the first
    /// `n` of each list.
    pub fn top_n(&self, n: usize) -> BTreeSet<EntityId> {
        self.embedding
            .iter()
            .take(n)
            .chain(self.lm.iter().take(n))
            .map(|c| c.entity.clone())
            .collect()
    }

    /// Recall of `truth` for the embedding list, the LM list and their
    /// union, each at a budget of `n` per generator.
    pub fn recall_at(&self, truth: &BTreeSet<EntityId>, n: usize) -> SourceRecall {
        let ids = |cs: &[Candidate]| cs.iter().map(|c| c.entity.clone()).collect::<Vec<_>>();
        let combined: Vec<EntityId> = self.top_n(n).into_iter().collect();
        SourceRecall {
            embedding: recall_at_n(&ids(&self.embedding), truth, n),
            lm: recall_at_n(&ids(&self.lm), truth, n),
            combined: recall_at_n(&combined, truth, combined.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceRecall {
    pub embedding: f64,
    pub lm: f64,
    pub combined: f64,
}

/// Read-only models subject suggestion draws on.
#[derive(Clone, Copy)]
pub struct SuggestModels<'a> {
    pub kb: &'a KnowledgeBase,
    pub idx: &'a EmbeddingIndex,
    pub labels: &'a dyn LabelEmbedder,
    pub generator: &'a dyn TextGenerator,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Suggestions {
    pub pool: CandidatePool,
    pub ranked: Vec<RankedSuggestion>,
}

/// Generates candidates from both sources, extracts features and ranks
/// the union. Returns an empty ranking when neither source yields a
/// candidate.
pub fn suggest_subjects(
    models: SuggestModels<'_>,
    linked: &LinkedTable,
    config: &SuggestConfig,
) -> Result<Suggestions, ClientError> {
    let seeds = linked.seeds();
    if seeds.is_empty() {
        return Ok(Suggestions::default());
    }
    let in_table = linked.in_table_properties();
    let hoods = SeedNeighborhoods::compute(models.idx, &seeds, config.k_per_seed);
    let pool = CandidatePool {
        embedding: embedding_candidates(models.kb, &hoods, &in_table, config),
        lm: lm_candidates(models.kb, models.generator, linked, config)?,
    };
    let mut combined = pool.combined();
    if combined.is_empty() {
        return Ok(Suggestions { pool, ranked: Vec::new() });
    }
    let ctx = FeatureContext::new(models.kb, models.idx, models.labels, &hoods, &in_table);
    for c in &mut combined {
        c.features = Some(ctx.extract(c));
    }
    let ranked = rank_candidates(&combined, config).unwrap_or_default();
    Ok(Suggestions { pool, ranked })
}

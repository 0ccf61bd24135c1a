//! Ranking features of a candidate relative to the seed rows.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::generate::SeedNeighborhoods;
use super::{Candidate, CandidateSource};
use crate::embed::{normalized_levenshtein, EmbeddingIndex, LabelEmbedder};
use crate::kb::{EntityId, KnowledgeBase, PropertyId};
use crate::text::normalize;
use crate::vector;

/// Value of `dist_to_closest_seed` when no distance is available.
pub const NO_DISTANCE: f64 = f64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// Smallest metric distance to a seed embedding, or [`NO_DISTANCE`].
    pub dist_to_closest_seed: f64,
    /// Share of the seeds' out-of-table properties the candidate also has.
    pub extra_property_overlap: f64,
    pub min_label_levenshtein: f64,
    /// Smallest cosine distance between label embeddings, in `[0, 2]`.
    pub min_label_embed_distance: f64,
    /// Share of the seeds' types the candidate has.
    pub type_overlap: f64,
    /// Share of seeds listing the candidate among their neighbours.
    pub seed_neighbor_fraction: f64,
    pub source: CandidateSource,
    pub lm_score: Option<f64>,
}

/// Inputs shared by every candidate of one table.
pub struct FeatureContext<'a> {
    pub kb: &'a KnowledgeBase,
    pub idx: &'a EmbeddingIndex,
    pub labels: &'a dyn LabelEmbedder,
    pub hoods: &'a SeedNeighborhoods,
    seed_props: BTreeSet<&'a PropertyId>,
    extra_props: usize,
    seed_types: BTreeSet<&'a EntityId>,
    seed_labels: Vec<(alloc::string::String, Vec<f64>)>,
    in_table: BTreeSet<&'a PropertyId>,
}

impl<'a> FeatureContext<'a> {
    pub fn new(
        kb: &'a KnowledgeBase,
        idx: &'a EmbeddingIndex,
        labels: &'a dyn LabelEmbedder,
        hoods: &'a SeedNeighborhoods,
        in_table: &'a [PropertyId],
    ) -> Self {
        let in_table: BTreeSet<&PropertyId> = in_table.iter().collect();
        let seed_props: BTreeSet<&PropertyId> = hoods.seeds.iter().flat_map(|s| kb.properties_of(s)).collect();
        let extra_props = seed_props.iter().filter(|p| !in_table.contains(*p)).count();
        let seed_types = hoods.seeds.iter().flat_map(|s| kb.direct_types(s)).collect();
        let seed_labels = hoods
            .seeds
            .iter()
            .map(|s| {
                let l = kb.label(s);
                (normalize(l), labels.embed(l))
            })
            .collect();
        Self {
            kb,
            idx,
            labels,
            hoods,
            seed_props,
            extra_props,
            seed_types,
            seed_labels,
            in_table,
        }
    }

    pub fn extract(&self, c: &Candidate) -> FeatureVector {
        let kb = self.kb;
        let e = &c.entity;
        let seeds = &self.hoods.seeds;

        let dist_to_closest_seed = seeds
            .iter()
            .filter_map(|s| self.idx.distance(e, s).ok())
            .reduce(f64::min)
            .unwrap_or(NO_DISTANCE);

        let shared_extra = kb
            .properties_of(e)
            .filter(|p| !self.in_table.contains(p) && self.seed_props.contains(p))
            .count();
        let extra_property_overlap = shared_extra as f64 / self.extra_props.max(1) as f64;

        let label = kb.label(e);
        let norm_label = normalize(label);
        let label_vec = self.labels.embed(label);
        let min_label_levenshtein = self
            .seed_labels
            .iter()
            .map(|(l, _)| normalized_levenshtein(&norm_label, l))
            .reduce(f64::min)
            .unwrap_or(1.0);
        let min_label_embed_distance = self
            .seed_labels
            .iter()
            .map(|(_, v)| 1.0 - vector::cosine(&label_vec, v))
            .reduce(f64::min)
            .unwrap_or(1.0);

        let shared_types = kb
            .direct_types(e)
            .iter()
            .filter(|t| self.seed_types.contains(t))
            .count();
        let type_overlap = shared_types as f64 / self.seed_types.len().max(1) as f64;

        let seed_neighbor_fraction = if seeds.is_empty() {
            0.0
        } else {
            self.hoods.seeds_with_neighbor(e) as f64 / seeds.len() as f64
        };

        FeatureVector {
            dist_to_closest_seed,
            extra_property_overlap,
            min_label_levenshtein,
            min_label_embed_distance,
            type_overlap,
            seed_neighbor_fraction,
            source: c.source,
            lm_score: if c.source == CandidateSource::Embedding {
                None
            } else {
                c.lm_score
            },
        }
    }
}

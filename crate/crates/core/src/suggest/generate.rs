//! Candidate generation from embedding neighbourhoods and LM generations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::{Candidate, CandidateSource, SuggestConfig};
use crate::clients::{ClientError, GenerationRequest, TextGenerator};
use crate::embed::{EmbeddingIndex, Neighbor};
use crate::interpret::LinkedTable;
use crate::kb::{EntityId, KnowledgeBase, PropertyId};
use crate::text::normalize;

/// The `k_per_seed` nearest neighbours of every seed that has an embedding.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedNeighborhoods {
    pub seeds: Vec<EntityId>,
    pub neighbors: BTreeMap<EntityId, Vec<Neighbor>>,
}

impl SeedNeighborhoods {
    pub fn compute(idx: &EmbeddingIndex, seeds: &[EntityId], k_per_seed: usize) -> Self {
        let neighbors = seeds
            .iter()
            .filter_map(|s| idx.nearest_neighbors(s, k_per_seed).ok().map(|n| (s.clone(), n)))
            .collect();
        Self {
            seeds: seeds.to_vec(),
            neighbors,
        }
    }

    /// Number of seeds listing `c` among their neighbours.
    pub fn seeds_with_neighbor(&self, c: &EntityId) -> usize {
        self.neighbors
            .values()
            .filter(|ns| ns.iter().any(|n| &n.entity == c))
            .count()
    }
}

/// Whether `c` passes the type and property filters for embedding
/// candidates. With no in-table properties the property filter is vacuous.
pub fn passes_filters(
    kb: &KnowledgeBase,
    seeds: &[EntityId],
    in_table: &[PropertyId],
    high_cardinality: &BTreeSet<EntityId>,
    c: &EntityId,
) -> bool {
    let seed_types: BTreeSet<&EntityId> = seeds.iter().flat_map(|s| kb.direct_types(s)).collect();
    let shared: Vec<&EntityId> = kb
        .direct_types(c)
        .iter()
        .filter(|t| seed_types.contains(t))
        .collect();
    if shared.is_empty() {
        return false;
    }
    if in_table.is_empty() {
        return true;
    }
    if shared.iter().any(|t| high_cardinality.contains(*t)) {
        in_table.iter().all(|p| kb.has_property(c, p))
    } else {
        in_table.iter().any(|p| kb.has_property(c, p))
    }
}

/// Filtered union of the seed neighbourhoods, best similarity first, ties
/// by id. Seeds are never candidates.
pub fn embedding_candidates(
    kb: &KnowledgeBase,
    hoods: &SeedNeighborhoods,
    in_table: &[PropertyId],
    config: &SuggestConfig,
) -> Vec<Candidate> {
    let seeds: BTreeSet<&EntityId> = hoods.seeds.iter().collect();
    let mut best: BTreeMap<&EntityId, f64> = BTreeMap::new();
    for n in hoods.neighbors.values().flatten() {
        if seeds.contains(&n.entity) {
            continue;
        }
        best.entry(&n.entity)
            .and_modify(|s| *s = s.max(n.similarity))
            .or_insert(n.similarity);
    }
    let mut kept: Vec<(&EntityId, f64)> = best
        .into_iter()
        .filter(|(c, _)| passes_filters(kb, &hoods.seeds, in_table, &config.high_cardinality_types, c))
        .collect();
    kept.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    kept.into_iter()
        .map(|(c, _)| Candidate::new(c.clone(), CandidateSource::Embedding))
        .collect()
}

/// "S has P1 V1 and has P2 V2" for row `i`, over linked columns with a
/// non-empty cell in column order. Returns `None` for an unlinked row.
pub fn to_prompt(kb: &KnowledgeBase, linked: &LinkedTable, i: usize) -> Option<String> {
    let subject = linked.main_column.get(i)?.as_ref()?;
    let mut out = String::from(kb.label(subject));
    let mut first = true;
    for j in 1..linked.n_cols() {
        let (Some(p), cell) = (linked.property(j), linked.table.cell(i, j).trim()) else {
            continue;
        };
        if cell.is_empty() {
            continue;
        }
        out.push_str(if first { " has " } else { " and has " });
        out.push_str(kb.property_label(p));
        out.push(' ');
        out.push_str(cell);
        first = false;
    }
    Some(out)
}

/// Prompts of all linked rows, newline-joined in row order.
pub fn lm_prompt(kb: &KnowledgeBase, linked: &LinkedTable) -> String {
    let rows: Vec<String> = (0..linked.n_rows()).filter_map(|i| to_prompt(kb, linked, i)).collect();
    rows.join("\n")
}

/// Subject text of one generated line: everything before the first
/// `" has "`, or the whole trimmed line.
pub fn generated_subject(line: &str) -> &str {
    let line = line.trim().trim_start_matches(['-', '*']).trim_start();
    match line.find(" has ") {
        Some(at) => line[..at].trim(),
        None => line.trim_end_matches(['.', '!', '?']).trim(),
    }
}

/// Entities named by generated lines that resolve to exactly one KB
/// entity, excluding seeds. Ordered by number of mentions, then first
/// mention; each keeps the best generation score seen.
pub fn lm_candidates(
    kb: &KnowledgeBase,
    generator: &dyn TextGenerator,
    linked: &LinkedTable,
    config: &SuggestConfig,
) -> Result<Vec<Candidate>, ClientError> {
    let seeds: BTreeSet<EntityId> = linked.seeds().into_iter().collect();
    if seeds.is_empty() {
        return Ok(Vec::new());
    }
    let request = GenerationRequest::new(lm_prompt(kb, linked))
        .with_samples(config.samples)
        .with_temperature(config.temperature);
    let generations = generator.generate(&request)?;

    // entity -> (mentions, first mention, best score)
    let mut seen: BTreeMap<EntityId, (usize, usize, Option<f64>)> = BTreeMap::new();
    let mut order = 0usize;
    for g in &generations {
        for line in g.text.lines() {
            let subject = normalize(generated_subject(line));
            if subject.is_empty() {
                continue;
            }
            let ids = kb.resolve_label(&subject);
            let mut ids = ids.into_iter();
            let (Some(e), None) = (ids.next(), ids.next()) else { continue };
            if seeds.contains(&e) {
                continue;
            }
            let score = g.score.filter(|s| s.is_finite());
            let entry = seen.entry(e).or_insert((0, order, None));
            entry.0 += 1;
            entry.2 = match (entry.2, score) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
            order += 1;
        }
    }
    let mut ranked: Vec<(EntityId, (usize, usize, Option<f64>))> = seen.into_iter().collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    Ok(ranked
        .into_iter()
        .map(|(e, (_, _, score))| {
            let mut c = Candidate::new(e, CandidateSource::Lm);
            c.lm_score = score;
            c
        })
        .collect())
}

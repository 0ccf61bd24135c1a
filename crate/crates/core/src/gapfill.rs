//! Ranked gap filling: a KB triple when one exists, otherwise LM-generated
//! values kept only when a web snippet about them resembles what the seed
//! rows say.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::clients::{ClientError, GenerationRequest, SearchSnippet, Services, SourceFilter};
use crate::interpret::{is_numeric_cell, LinkedTable};
use crate::kb::{EntityId, KnowledgeBase, ObjectValue, PropertyId, Triple};
use crate::text::normalize;
use crate::vector::cosine;

/// How a pooled sentence's similarity to the rest of the pool is summarised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContextMode {
    #[default]
    Mean,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapFillConfig {
    pub samples: usize,
    pub temperature: f64,
    /// A snippet must score strictly above this to verify a value.
    pub fill_threshold: f64,
    /// Pool sentences below this similarity are left out of the context.
    pub sim_threshold: f64,
    pub context_mode: ContextMode,
    pub source_filter: SourceFilter,
}

impl Default for GapFillConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            temperature: 0.7,
            fill_threshold: 0.05,
            sim_threshold: 0.5,
            context_mode: ContextMode::Mean,
            source_filter: SourceFilter::NEWS_AND_WIKIPEDIA,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    KbTriple(Triple),
    WebSnippet { snippet: SearchSnippet, similarity: f64 },
}

impl Provenance {
    pub fn kind(&self) -> &'static str {
        match self {
            Provenance::KbTriple(_) => "kb-triple",
            Provenance::WebSnippet { .. } => "web-snippet",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapFill {
    pub value: String,
    pub provenance: Provenance,
    /// Set for numeric values, which LM generation gets wrong more often.
    pub numeric_warning: bool,
}

impl GapFill {
    fn new(value: String, provenance: Provenance) -> Self {
        let numeric_warning = is_numeric_cell(&value);
        Self {
            value,
            provenance,
            numeric_warning,
        }
    }
}

/// Seed-row sentences used to judge snippets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedContext {
    pub sentences: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

impl SeedContext {
    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Highest cosine similarity between `v` and a context sentence, or
    /// `None` for an empty context.
    pub fn score(&self, v: &[f64]) -> Option<f64> {
        self.vectors.iter().map(|c| cosine(v, c)).reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GapFillError {
    #[error("row {0} has no linked subject")]
    Unlinked(usize),
    #[error("column {0} is not a fillable column")]
    InvalidColumn(usize),
    #[error(transparent)]
    Client(#[from] ClientError),
}

/// Text of a KB object as a cell value.
pub fn object_text(kb: &KnowledgeBase, o: &ObjectValue) -> String {
    match o {
        ObjectValue::Entity(e) => kb.label(e).to_string(),
        ObjectValue::Number(q) => q.to_string(),
        ObjectValue::Text(s) | ObjectValue::Time(s) => s.clone(),
    }
}

/// Keeps the pooled sentences whose mean (or max) cosine similarity to the
/// other pooled sentences reaches `threshold`. A lone sentence is kept.
pub fn select_context(sentences: Vec<String>, vectors: Vec<Vec<f64>>, threshold: f64, mode: ContextMode) -> SeedContext {
    let n = sentences.len();
    if n <= 1 {
        return SeedContext { sentences, vectors };
    }
    let keep: Vec<bool> = (0..n)
        .map(|i| {
            let sims = (0..n).filter(|&j| j != i).map(|j| cosine(&vectors[i], &vectors[j]));
            let s = match mode {
                ContextMode::Mean => sims.sum::<f64>() / (n - 1) as f64,
                ContextMode::Max => sims.fold(f64::NEG_INFINITY, f64::max),
            };
            s >= threshold
        })
        .collect();
    let mut out = SeedContext::default();
    for ((s, v), k) in sentences.into_iter().zip(vectors).zip(keep) {
        if k {
            out.sentences.push(s);
            out.vectors.push(v);
        }
    }
    out
}

/// Seed rows of column `j` usable as examples: linked subject other than
/// `target` and a non-empty cell.
fn example_rows<'t>(linked: &'t LinkedTable, j: usize, target: Option<&EntityId>) -> Vec<(&'t EntityId, &'t str)> {
    let mut seen = BTreeSet::new();
    linked
        .linked_rows()
        .filter(|(_, e)| Some(*e) != target)
        .map(|(i, e)| (e, linked.table.cell(i, j).trim()))
        .filter(|(e, cell)| !cell.is_empty() && seen.insert(*e))
        .collect()
}

/// Searches each seed row's subject, cell and property label, pools the
/// snippet descriptions and keeps the mutually similar ones.
pub fn context_of_seeds(
    services: Services<'_>,
    kb: &KnowledgeBase,
    linked: &LinkedTable,
    j: usize,
    p: Option<&PropertyId>,
    config: &GapFillConfig,
) -> Result<SeedContext, ClientError> {
    let mut sentences = Vec::new();
    for (e, cell) in example_rows(linked, j, None) {
        let mut keywords = alloc::vec![kb.label(e).to_string(), cell.to_string()];
        if let Some(p) = p {
            keywords.push(kb.property_label(p).to_string());
        }
        let hits = services.search.search(&keywords, config.source_filter)?;
        sentences.extend(hits.into_iter().map(|s| s.description));
    }
    let vectors = sentences.iter().map(|s| services.encoder.encode(s)).collect();
    Ok(select_context(sentences, vectors, config.sim_threshold, config.context_mode))
}

/// Generation prompt for filling column `j` of `target`'s row.
///
/// With a property: one "S has P V" line per example row, then "C has P".
/// Without: "S1 is to V1 as S2 is to V2 as C is to". `None` when no row
/// can serve as an example.
pub fn build_fill_prompt(
    kb: &KnowledgeBase,
    linked: &LinkedTable,
    j: usize,
    p: Option<&PropertyId>,
    target: &EntityId,
) -> Option<String> {
    let examples = example_rows(linked, j, Some(target));
    if examples.is_empty() {
        return None;
    }
    let c = kb.label(target);
    Some(match p {
        Some(p) => {
            let pl = kb.property_label(p);
            let mut lines: Vec<String> = examples
                .iter()
                .map(|(e, v)| alloc::format!("{} has {pl} {v}", kb.label(e)))
                .collect();
            lines.push(alloc::format!("{c} has {pl}"));
            lines.join("\n")
        }
        None => {
            let mut parts: Vec<String> = examples
                .iter()
                .map(|(e, v)| alloc::format!("{} is to {v}", kb.label(e)))
                .collect();
            parts.push(alloc::format!("{c} is to"));
            parts.join(" as ")
        }
    })
}

/// The value a generation proposes: its text up to the first newline or
/// sentence end, trimmed.
pub fn extract_value(generation: &str) -> &str {
    let line = generation.trim_start().lines().next().unwrap_or("");
    let mut end = line.len();
    let mut chars = line.char_indices().peekable();
    while let Some((at, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|(_, n)| n.is_whitespace()) {
            end = at;
            break;
        }
    }
    line[..end].trim()
}

/// Samples values for `subject`'s cell in column `j` and keeps each value
/// whose best snippet scores above the fill threshold against `context`.
/// Sorted by descending similarity, then value.
#[allow(clippy::too_many_arguments)]
pub fn rank_values(
    services: Services<'_>,
    kb: &KnowledgeBase,
    linked: &LinkedTable,
    subject: &EntityId,
    j: usize,
    p: Option<&PropertyId>,
    context: &SeedContext,
    config: &GapFillConfig,
) -> Result<Vec<GapFill>, ClientError> {
    let Some(prompt) = build_fill_prompt(kb, linked, j, p, subject) else {
        return Ok(Vec::new());
    };
    let request = GenerationRequest::new(prompt)
        .with_samples(config.samples)
        .with_temperature(config.temperature);
    let generations = services.generator.generate(&request)?;

    let mut values: Vec<&str> = Vec::new();
    let mut seen = BTreeSet::new();
    for g in &generations {
        let v = extract_value(&g.text);
        if !v.is_empty() && seen.insert(normalize(v)) {
            values.push(v);
        }
    }

    let mut best: BTreeMap<String, GapFill> = BTreeMap::new();
    for value in values {
        let mut keywords = alloc::vec![kb.label(subject).to_string()];
        if let Some(p) = p {
            keywords.push(kb.property_label(p).to_string());
        }
        keywords.push(value.to_string());
        let snippets = services.search.search(&keywords, config.source_filter)?;
        let top = snippets
            .into_iter()
            .filter_map(|s| {
                let sim = context.score(&services.encoder.encode(&s.description))?;
                Some((s, sim))
            })
            .fold(None::<(SearchSnippet, f64)>, |acc, (s, sim)| match acc {
                Some((_, b)) if b >= sim => acc,
                _ => Some((s, sim)),
            });
        if let Some((snippet, similarity)) = top {
            if similarity > config.fill_threshold {
                let fill = GapFill::new(value.to_string(), Provenance::WebSnippet { snippet, similarity });
                best.insert(normalize(value), fill);
            }
        }
    }
    let mut out: Vec<GapFill> = best.into_values().collect();
    out.sort_by(|a, b| similarity(b).total_cmp(&similarity(a)).then_with(|| a.value.cmp(&b.value)));
    Ok(out)
}

fn similarity(f: &GapFill) -> f64 {
    match &f.provenance {
        Provenance::WebSnippet { similarity, .. } => *similarity,
        Provenance::KbTriple(_) => 1.0,
    }
}

/// Fills cells of one linked table, caching the seed context per column.
pub struct GapFiller<'a> {
    pub kb: &'a KnowledgeBase,
    pub linked: &'a LinkedTable,
    pub services: Services<'a>,
    pub config: &'a GapFillConfig,
    contexts: RefCell<BTreeMap<usize, SeedContext>>,
}

impl<'a> GapFiller<'a> {
    pub fn new(kb: &'a KnowledgeBase, linked: &'a LinkedTable, services: Services<'a>, config: &'a GapFillConfig) -> Self {
        Self {
            kb,
            linked,
            services,
            config,
            contexts: RefCell::new(BTreeMap::new()),
        }
    }

    fn context(&self, j: usize) -> Result<SeedContext, ClientError> {
        if let Some(c) = self.contexts.borrow().get(&j) {
            return Ok(c.clone());
        }
        let c = context_of_seeds(self.services, self.kb, self.linked, j, self.linked.property(j), self.config)?;
        self.contexts.borrow_mut().insert(j, c.clone());
        Ok(c)
    }

    /// Fills cell `(i, j)` of the table.
    pub fn gap_fill(&self, i: usize, j: usize) -> Result<Vec<GapFill>, GapFillError> {
        let subject = self
            .linked
            .main_column
            .get(i)
            .and_then(Option::as_ref)
            .ok_or(GapFillError::Unlinked(i))?;
        self.fill_cell(subject, j)
    }

    /// Fills column `j` for `subject`. A KB triple for the column's
    /// property is returned as is, without calling any service.
    pub fn fill_cell(&self, subject: &EntityId, j: usize) -> Result<Vec<GapFill>, GapFillError> {
        if j == 0 || j >= self.linked.n_cols() {
            return Err(GapFillError::InvalidColumn(j));
        }
        let p = self.linked.property(j);
        if let Some((p, o)) = p.and_then(|p| self.kb.get(subject, p).map(|o| (p, o))) {
            let triple = Triple {
                subject: subject.clone(),
                property: p.clone(),
                object: o.clone(),
            };
            return Ok(alloc::vec![GapFill::new(object_text(self.kb, o), Provenance::KbTriple(triple))]);
        }
        let context = self.context(j)?;
        Ok(rank_values(self.services, self.kb, self.linked, subject, j, p, &context, self.config)?)
    }

    /// Fills every non-main column for a new row about `entity`.
    pub fn complete_row(&self, entity: &EntityId) -> Result<Vec<(usize, Vec<GapFill>)>, GapFillError> {
        (1..self.linked.n_cols())
            .map(|j| self.fill_cell(entity, j).map(|f| (j, f)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::{
        Generation, HashingSentenceEncoder, MockGenerator, MockSearch, SentenceEncoder, SnippetSource,
    };
    use crate::interpret::Table;
    use crate::kb::KbBuilder;
    use alloc::vec;

    fn kb() -> KnowledgeBase {
        let mut b = KbBuilder::new();
        b.entity("Q5".into(), "human", vec![]).unwrap();
        for (e, l) in [("A", "Alpha"), ("B", "Beta"), ("C", "Gamma"), ("X", "Compton")] {
            b.entity(e.into(), l, vec![]).unwrap();
        }
        b.property("dob".into(), "date of birth").unwrap();
        b.property("pob".into(), "place of birth").unwrap();
        for (e, y) in [("A", "1977"), ("B", "1987"), ("C", "1990")] {
            b.triple(Triple {
                subject: e.into(),
                property: "dob".into(),
                object: ObjectValue::Time(y.into()),
            })
            .unwrap();
        }
        b.triple(Triple {
            subject: "A".into(),
            property: "pob".into(),
            object: ObjectValue::Entity("X".into()),
        })
        .unwrap();
        b.build().unwrap()
    }

    fn linked() -> LinkedTable {
        let t = Table::from_strs(&[&["Alpha", "1977", "Atlanta"], &["Beta", "1987", "Boston"]]).unwrap();
        let mut l = LinkedTable::unlinked_columns(t, vec![Some("A".into()), Some("B".into())]);
        l.column_links.insert(1, Some("dob".into()));
        l.column_links.insert(2, None);
        l
    }

    fn snippet(url: &str, text: &str) -> SearchSnippet {
        SearchSnippet {
            url: url.into(),
            description: text.into(),
            source: SnippetSource::Wikipedia,
        }
    }

    fn kw(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn prompts() {
        let kb = kb();
        let l = linked();
        let dob = PropertyId::from("dob");
        assert_eq!(
            build_fill_prompt(&kb, &l, 1, Some(&dob), &"C".into()).unwrap(),
            "Alpha has date of birth 1977\nBeta has date of birth 1987\nGamma has date of birth"
        );
        assert_eq!(
            build_fill_prompt(&kb, &l, 2, None, &"C".into()).unwrap(),
            "Alpha is to Atlanta as Beta is to Boston as Gamma is to"
        );
        // the target's own row is not an example
        assert_eq!(
            build_fill_prompt(&kb, &l, 1, Some(&dob), &"B".into()).unwrap(),
            "Alpha has date of birth 1977\nBeta has date of birth"
        );
        let single = LinkedTable::unlinked_columns(
            Table::from_strs(&[&["Alpha", "1977", ""]]).unwrap(),
            vec![Some("A".into())],
        );
        assert_eq!(build_fill_prompt(&kb, &single, 2, None, &"C".into()), None);
    }

    #[test]
    fn value_extraction() {
        assert_eq!(extract_value(" 1990.\nDelta has"), "1990");
        assert_eq!(extract_value("Glendale, Arizona. Born there"), "Glendale, Arizona");
        assert_eq!(extract_value("St. Louis"), "St");
        assert_eq!(extract_value("3.5 m tall"), "3.5 m tall");
        assert_eq!(extract_value("\n"), "");
    }

    #[test]
    fn context_selection() {
        let enc = HashingSentenceEncoder::default();
        let same: Vec<String> = vec!["a b c".into(); 3];
        let vecs = same.iter().map(|s| enc.encode(s)).collect();
        assert_eq!(select_context(same.clone(), vecs, 0.5, ContextMode::Mean).sentences.len(), 3);

        let pool: Vec<String> = vec![
            "alpha was born in atlanta".into(),
            "alpha born atlanta georgia".into(),
            "beta was born in boston".into(),
            "zebra quartz".into(),
        ];
        let vecs: Vec<Vec<f64>> = pool.iter().map(|s| enc.encode(s)).collect();
        let ctx = select_context(pool.clone(), vecs.clone(), 0.3, ContextMode::Mean);
        assert!(!ctx.sentences.contains(&String::from("zebra quartz")));
        assert_eq!(ctx.sentences.len(), ctx.vectors.len());
        // the oracle: mean pairwise cosine per sentence
        for (i, s) in pool.iter().enumerate() {
            let mean: f64 = (0..4).filter(|&j| j != i).map(|j| cosine(&vecs[i], &vecs[j])).sum::<f64>() / 3.0;
            assert_eq!(ctx.sentences.contains(s), mean >= 0.3);
        }
        let lone = select_context(vec!["x".into()], vec![enc.encode("x")], 0.99, ContextMode::Max);
        assert_eq!(lone.sentences.len(), 1);
    }

    #[test]
    fn kb_triples_short_circuit_services() {
        let kb = kb();
        let l = linked();
        let generator = MockGenerator::default();
        let search = MockSearch::default();
        let encoder = HashingSentenceEncoder::default();
        let services = Services {
            generator: &generator,
            search: &search,
            encoder: &encoder,
        };
        let config = GapFillConfig::default();
        let filler = GapFiller::new(&kb, &l, services, &config);
        let fills = filler.fill_cell(&"C".into(), 1).unwrap();
        assert_eq!(fills.len(), 1);
        assert_eq!(fills[0].value, "1990");
        assert_eq!(fills[0].provenance.kind(), "kb-triple");
        assert!(fills[0].numeric_warning);
        assert_eq!((generator.calls(), search.calls()), (0, 0));

        assert_eq!(filler.gap_fill(5, 1), Err(GapFillError::Unlinked(5)));
        assert_eq!(filler.fill_cell(&"C".into(), 0), Err(GapFillError::InvalidColumn(0)));
        assert_eq!(filler.fill_cell(&"C".into(), 3), Err(GapFillError::InvalidColumn(3)));
    }

    #[test]
    fn unlinked_column_is_verified_against_snippets() {
        let kb = kb();
        let l = linked();
        let prompt = "Alpha is to Atlanta as Beta is to Boston as Gamma is to";
        let generator = MockGenerator::new(
            [(
                prompt.into(),
                vec![
                    Generation {
                        text: " Compton.".into(),
                        score: None,
                    },
                    Generation {
                        text: "compton".into(),
                        score: None,
                    },
                    Generation {
                        text: "Nowhere".into(),
                        score: None,
                    },
                ],
            )]
            .into_iter()
            .collect(),
        );
        let search = MockSearch::new([
            (
                kw(&["Alpha", "Atlanta"]),
                vec![snippet("u1", "Alpha is a rapper born in Atlanta")],
            ),
            (kw(&["Beta", "Boston"]), vec![snippet("u2", "Beta is a rapper born in Boston")]),
            (
                kw(&["Gamma", "Compton"]),
                vec![
                    snippet("u3", "unrelated words entirely"),
                    snippet("u4", "Gamma is a rapper born in Compton"),
                ],
            ),
            (kw(&["Gamma", "Nowhere"]), vec![snippet("u5", "zzz qqq")]),
        ]);
        let encoder = HashingSentenceEncoder::default();
        let services = Services {
            generator: &generator,
            search: &search,
            encoder: &encoder,
        };
        let config = GapFillConfig::default();
        let filler = GapFiller::new(&kb, &l, services, &config);
        let fills = filler.complete_row(&"C".into()).unwrap();
        assert_eq!(fills.len(), 2);
        assert_eq!(fills[0].1[0].provenance.kind(), "kb-triple");
        let col2 = &fills[1].1;
        assert_eq!(col2.len(), 1);
        assert_eq!(col2[0].value, "Compton");
        assert!(!col2[0].numeric_warning);
        let Provenance::WebSnippet { snippet, similarity } = &col2[0].provenance else {
            panic!("expected a snippet")
        };
        assert_eq!(snippet.url, "u4");
        let ctx = context_of_seeds(services, &kb, &l, 2, None, &config).unwrap();
        let expected = ctx.score(&encoder.encode("Gamma is a rapper born in Compton")).unwrap();
        assert_eq!(*similarity, expected);
        assert!(*similarity > config.fill_threshold);
    }

    #[test]
    fn empty_generator_leaves_cell_blank() {
        let kb = kb();
        let l = linked();
        let generator = MockGenerator::default();
        let search = MockSearch::default();
        let encoder = HashingSentenceEncoder::default();
        let services = Services {
            generator: &generator,
            search: &search,
            encoder: &encoder,
        };
        let config = GapFillConfig::default();
        let filler = GapFiller::new(&kb, &l, services, &config);
        assert!(filler.fill_cell(&"C".into(), 2).unwrap().is_empty());
        assert!(filler.fill_cell(&"X".into(), 1).unwrap().is_empty());
    }
}

//! External-service boundary: text generation, web search and sentence
//! encoding.
//!
//! Each service is a trait so the pipeline can run against deterministic
//! in-memory mocks (defined here) or network clients (in the `rowcomp`
//! crate). All traits require `Send + Sync` so one client can serve many
//! workers.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::vector;

/// Most snippets a search returns.
pub const MAX_SNIPPETS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub samples: usize,
    pub temperature: f64,
    pub max_sentences: usize,
}

impl GenerationRequest {
    /// 100 single-sentence samples at temperature 0.7.
    pub fn new(prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            samples: 100,
            temperature: 0.7,
            max_sentences: 1,
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples.max(1);
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature.clamp(0.0, 2.0);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub text: String,
    /// Mean token log-probability when the backend reports one.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SnippetSource {
    Wikipedia,
    News,
    Other,
}

impl SnippetSource {
    pub fn name(self) -> &'static str {
        match self {
            SnippetSource::Wikipedia => "wikipedia",
            SnippetSource::News => "news",
            SnippetSource::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wikipedia" => Some(SnippetSource::Wikipedia),
            "news" => Some(SnippetSource::News),
            "other" => Some(SnippetSource::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSnippet {
    pub url: String,
    /// Result name and snippet text, concatenated.
    pub description: String,
    pub source: SnippetSource,
}

/// Which snippet sources a search may return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceFilter {
    pub wikipedia: bool,
    pub news: bool,
    pub other: bool,
}

impl SourceFilter {
    pub const ANY: Self = Self {
        wikipedia: true,
        news: true,
        other: true,
    };
    pub const WIKIPEDIA: Self = Self {
        wikipedia: true,
        news: false,
        other: false,
    };
    pub const NEWS_AND_WIKIPEDIA: Self = Self {
        wikipedia: true,
        news: true,
        other: false,
    };

    pub fn accepts(self, source: SnippetSource) -> bool {
        match source {
            SnippetSource::Wikipedia => self.wikipedia,
            SnippetSource::News => self.news,
            SnippetSource::Other => self.other,
        }
    }
}

impl Default for SourceFilter {
    fn default() -> Self {
        Self::NEWS_AND_WIKIPEDIA
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("transient service error: {0}")]
    Retryable(String),
    #[error("service error: {0}")]
    Fatal(String),
}

impl ClientError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ClientError::Retryable(_))
    }
}

pub trait TextGenerator: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, ClientError>;
}

pub trait SearchEngine: Send + Sync {
    /// At most [`MAX_SNIPPETS`] results in engine rank order.
    fn search(&self, keywords: &[String], filter: SourceFilter) -> Result<Vec<SearchSnippet>, ClientError>;
}

pub trait SentenceEncoder: Send + Sync {
    fn encode(&self, text: &str) -> Vec<f64>;
}

/// The three services a pipeline run needs.
#[derive(Clone, Copy)]
pub struct Services<'a> {
    pub generator: &'a dyn TextGenerator,
    pub search: &'a dyn SearchEngine,
    pub encoder: &'a dyn SentenceEncoder,
}

/// Generator that replays fixture outputs keyed by the exact prompt.
#[derive(Debug, Default)]
pub struct MockGenerator {
    outputs: BTreeMap<String, Vec<Generation>>,
    calls: AtomicUsize,
}

impl MockGenerator {
    /// Generations with empty text are dropped.
    pub fn new(outputs: BTreeMap<String, Vec<Generation>>) -> Self {
        let outputs = outputs
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().filter(|g| !g.text.trim().is_empty()).collect()))
            .collect();
        Self {
            outputs,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn prompts(&self) -> impl Iterator<Item = &str> {
        self.outputs.keys().map(String::as_str)
    }
}

impl TextGenerator for MockGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, ClientError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self
            .outputs
            .get(&request.prompt)
            .map(|g| g.iter().take(request.samples).cloned().collect())
            .unwrap_or_default())
    }
}

/// Search engine that replays fixture snippets keyed by the sorted
/// keyword multiset.
#[derive(Debug, Default)]
pub struct MockSearch {
    entries: BTreeMap<Vec<String>, Vec<SearchSnippet>>,
    calls: AtomicUsize,
}

impl MockSearch {
    pub fn new(entries: impl IntoIterator<Item = (Vec<String>, Vec<SearchSnippet>)>) -> Self {
        let mut map: BTreeMap<Vec<String>, Vec<SearchSnippet>> = BTreeMap::new();
        for (keywords, snippets) in entries {
            map.entry(Self::key(&keywords)).or_default().extend(snippets);
        }
        Self {
            entries: map,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn key(keywords: &[String]) -> Vec<String> {
        let mut k = keywords.to_vec();
        k.sort();
        k
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl SearchEngine for MockSearch {
    fn search(&self, keywords: &[String], filter: SourceFilter) -> Result<Vec<SearchSnippet>, ClientError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self
            .entries
            .get(&Self::key(keywords))
            .map(|s| {
                s.iter()
                    .filter(|x| filter.accepts(x.source))
                    .take(MAX_SNIPPETS)
                    .cloned()
                    .collect()
            })
            .unwrap_or_default())
    }
}

/// Bag-of-words encoder: lowercase alphanumeric tokens, term counts hashed
/// into a fixed number of buckets, L2-normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingSentenceEncoder {
    pub dim: usize,
}

impl Default for HashingSentenceEncoder {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

impl HashingSentenceEncoder {
    pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| t.chars().flat_map(char::to_lowercase).collect())
    }

    pub fn token_bucket(&self, token: &str) -> usize {
        crate::embed::hash_bucket(token, self.dim)
    }
}

impl SentenceEncoder for HashingSentenceEncoder {
    fn encode(&self, text: &str) -> Vec<f64> {
        let mut v = alloc::vec![0.0; self.dim];
        for t in Self::tokens(text) {
            v[self.token_bucket(&t)] += 1.0;
        }
        vector::normalized(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::cosine;
    use alloc::collections::BTreeSet;
    use alloc::format;
    use alloc::vec;

    fn snippet(n: usize, source: SnippetSource) -> SearchSnippet {
        SearchSnippet {
            url: format!("https://example.org/{n}"),
            description: format!("result {n}"),
            source,
        }
    }

    #[test]
    fn request_defaults() {
        let r = GenerationRequest::new("p");
        assert_eq!((r.samples, r.temperature, r.max_sentences), (100, 0.7, 1));
    }

    #[test]
    fn mock_generator_replays_fixture() {
        let empty = MockGenerator::default();
        assert!(empty.generate(&GenerationRequest::new("P")).unwrap().is_empty());
        let gens: Vec<Generation> = ["a", "b", "c"]
            .iter()
            .map(|t| Generation {
                text: (*t).into(),
                score: None,
            })
            .collect();
        let mock = MockGenerator::new([("P".into(), gens.clone())].into_iter().collect());
        assert_eq!(mock.generate(&GenerationRequest::new("P")).unwrap(), gens);
        assert_eq!(
            mock.generate(&GenerationRequest::new("P").with_samples(2)).unwrap(),
            gens[..2]
        );
        assert!(mock.generate(&GenerationRequest::new("P ")).unwrap().is_empty());
        assert_eq!(mock.calls(), 3);
    }

    #[test]
    fn mock_search_truncates_and_filters() {
        let mut snippets: Vec<SearchSnippet> = (0..11).map(|n| snippet(n, SnippetSource::News)).collect();
        snippets.push(snippet(11, SnippetSource::Wikipedia));
        let mock = MockSearch::new([(vec!["b".into(), "a".into()], snippets)]);
        let kw = |xs: &[&str]| xs.iter().map(|x| String::from(*x)).collect::<Vec<_>>();
        assert_eq!(mock.search(&kw(&["a", "b"]), SourceFilter::ANY).unwrap().len(), 10);
        assert_eq!(mock.search(&kw(&["b", "a"]), SourceFilter::ANY).unwrap()[0].url, "https://example.org/0");
        let wiki = mock.search(&kw(&["a", "b"]), SourceFilter::WIKIPEDIA).unwrap();
        assert_eq!(wiki.len(), 1);
        assert_eq!(wiki[0].source, SnippetSource::Wikipedia);
        assert!(mock.search(&kw(&["a"]), SourceFilter::ANY).unwrap().is_empty());
        assert_eq!(mock.calls(), 4);
    }

    #[test]
    fn hashing_encoder() {
        let enc = HashingSentenceEncoder::default();
        let s = "Kendrick Lamar was born in Compton, California.";
        assert_eq!(enc.encode(s), enc.encode(s));
        assert!((cosine(&enc.encode(s), &enc.encode(s)) - 1.0).abs() < 1e-12);
        let (a, b) = ("alpha beta", "gamma delta");
        let buckets = |t: &str| -> BTreeSet<usize> {
            HashingSentenceEncoder::tokens(t).map(|x| enc.token_bucket(&x)).collect()
        };
        assert!(buckets(a).is_disjoint(&buckets(b)), "fixture pair collides");
        assert_eq!(cosine(&enc.encode(a), &enc.encode(b)), 0.0);
        assert!(enc.encode("").iter().all(|x| *x == 0.0));
    }
}

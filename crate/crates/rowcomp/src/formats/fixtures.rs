//! Mock client fixtures.
//!
//! ```json
//! {
//!   "generations": { "<exact prompt>": [ "text", { "text": "...", "score": -0.4 } ] },
//!   "search": [ { "keywords": ["a", "b"], "snippets": [ { "url": "...", "description": "...", "source": "wikipedia" } ] } ]
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rowcomp_core::clients::{Generation, MockGenerator, MockSearch, SearchSnippet, SnippetSource};
use serde::Deserialize;

use super::{read, FormatError};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockFixture {
    #[serde(default)]
    pub generations: BTreeMap<String, Vec<GenerationEntry>>,
    #[serde(default)]
    pub search: Vec<SearchEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum GenerationEntry {
    Text(String),
    Scored { text: String, score: Option<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchEntry {
    pub keywords: Vec<String>,
    pub snippets: Vec<SnippetEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnippetEntry {
    pub url: String,
    pub description: String,
    #[serde(default = "default_source")]
    pub source: String,
}

fn default_source() -> String {
    "wikipedia".into()
}

pub fn load_mock_clients(path: &Path) -> Result<(MockGenerator, MockSearch), FormatError> {
    parse_mock_clients(&read(path)?).map_err(|e| e.in_file(path))
}

pub fn parse_mock_clients(text: &str) -> Result<(MockGenerator, MockSearch), FormatError> {
    let fixture: MockFixture = serde_json::from_str(text).map_err(|e| FormatError {
        line: Some(e.line()),
        ..FormatError::new(e.to_string())
    })?;
    let generations = fixture
        .generations
        .into_iter()
        .map(|(prompt, gens)| {
            let gens = gens
                .into_iter()
                .map(|g| match g {
                    GenerationEntry::Text(text) => Generation { text, score: None },
                    GenerationEntry::Scored { text, score } => Generation { text, score },
                })
                .collect();
            (prompt, gens)
        })
        .collect();
    let mut entries = Vec::new();
    for (i, e) in fixture.search.into_iter().enumerate() {
        if e.keywords.is_empty() {
            return Err(FormatError::new(format!("search entry {i} has no keywords")));
        }
        let snippets = e
            .snippets
            .into_iter()
            .map(|s| {
                let source = SnippetSource::parse(&s.source)
                    .ok_or_else(|| FormatError::new(format!("search entry {i}: unknown source {:?}", s.source)))?;
                if s.description.trim().is_empty() {
                    return Err(FormatError::new(format!("search entry {i}: empty description")));
                }
                Ok(SearchSnippet {
                    url: s.url,
                    description: s.description,
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        entries.push((e.keywords, snippets));
    }
    Ok((MockGenerator::new(generations), MockSearch::new(entries)))
}

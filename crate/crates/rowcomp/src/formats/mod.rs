//! On-disk formats: KB TSV, embedding text files, CSV tables, mock client
//! fixtures, ground-truth files and the raw-dump ingest format.

mod embeddings;
mod fixtures;
mod ingest;
mod kb;
mod table;
mod truth;

use std::fmt;
use std::path::{Path, PathBuf};

pub use embeddings::{load_embeddings, load_word_vectors, parse_embeddings, parse_word_vectors, write_embeddings};
pub use fixtures::{load_mock_clients, parse_mock_clients, MockFixture};
pub use ingest::{ingest, ingest_file};
pub use kb::{load_kb, parse_kb, write_kb};
pub use table::{load_table, parse_table};
pub use truth::{load_truth, parse_truth, TruthFile};

/// A malformed input, with the offending line when known.
#[derive(Debug, thiserror::Error)]
pub struct FormatError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl FormatError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            path: None,
            line: None,
            message: message.into(),
        }
    }

    pub fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            ..Self::new(message)
        }
    }

    pub fn in_file(mut self, path: &Path) -> Self {
        self.path = Some(path.to_path_buf());
        self
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{}", p.display())?;
            if let Some(l) = self.line {
                write!(f, ":{l}")?;
            }
            f.write_str(": ")?;
        } else if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        f.write_str(&self.message)
    }
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError::new(e.to_string()).in_file(path))
}

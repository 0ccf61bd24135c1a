//! Embedding text files.
//!
//! Entity embeddings: a `dim metric` header, then `entity_id v1 .. vdim`
//! per line. Word vectors (for label embeddings) use the fastText `.vec`
//! layout: a `count dim` header, then `word v1 .. vdim`.

use std::io::Write;
use std::path::Path;

use rowcomp_core::embed::{EmbeddingIndex, Metric, PretrainedLabelEmbedder};
use rowcomp_core::kb::EntityId;

use super::{read, FormatError};

pub fn load_embeddings(path: &Path) -> Result<EmbeddingIndex, FormatError> {
    parse_embeddings(&read(path)?).map_err(|e| e.in_file(path))
}

fn numbers(fields: &[&str], dim: usize, line: usize) -> Result<Vec<f64>, FormatError> {
    if fields.len() != dim {
        return Err(FormatError::at(line, format!("expected {dim} components, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|x| {
            x.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FormatError::at(line, format!("bad component {x:?}")))
        })
        .collect()
}

/// Non-blank lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_embeddings(text: &str) -> Result<EmbeddingIndex, FormatError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| FormatError::new("missing `dim metric` header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let [dim, metric] = h[..] else {
        return Err(FormatError::at(hl, "header must be `dim metric`"));
    };
    let dim: usize = dim
        .parse()
        .ok()
        .filter(|d| *d > 0)
        .ok_or_else(|| FormatError::at(hl, format!("bad dimension {dim:?}")))?;
    let metric: Metric = metric.parse().map_err(|e| FormatError::at(hl, format!("{e}")))?;
    let mut rows = Vec::new();
    let mut seen = std::collections::BTreeMap::new();
    for (line, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        let id = EntityId::from(f[0]);
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(FormatError::at(line, format!("{id} already given on line {first}")));
        }
        rows.push((id, numbers(&f[1..], dim, line)?));
    }
    EmbeddingIndex::new(dim, metric, rows).map_err(|e| FormatError::new(e.to_string()))
}

pub fn write_embeddings(idx: &EmbeddingIndex, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", idx.dim(), idx.metric())?;
    for id in idx.ids() {
        write!(out, "{id}")?;
        for x in idx.vector(id).unwrap_or_default() {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn load_word_vectors(path: &Path) -> Result<PretrainedLabelEmbedder, FormatError> {
    parse_word_vectors(&read(path)?).map_err(|e| e.in_file(path))
}

pub fn parse_word_vectors(text: &str) -> Result<PretrainedLabelEmbedder, FormatError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| FormatError::new("missing `count dim` header"))?;
    let dim = header
        .split_whitespace()
        .nth(1)
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|d| *d > 0)
        .ok_or_else(|| FormatError::at(hl, "header must be `count dim`"))?;
    let mut words = Vec::new();
    for (line, l) in lines {
        let f: Vec<&str> = l.split(' ').filter(|x| !x.is_empty()).collect();
        // multi-word tokens are not expected; the last `dim` fields are the vector
        if f.len() <= dim {
            return Err(FormatError::at(line, format!("expected a word and {dim} components")));
        }
        let split = f.len() - dim;
        words.push((f[..split].join(" "), numbers(&f[split..], dim, line)?));
    }
    Ok(PretrainedLabelEmbedder::new(dim, words))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_write() {
        let idx = parse_embeddings("2 cosine\nb 0 1\na 1 0\n\n").unwrap();
        assert_eq!(idx.len(), 2);
        assert_eq!(idx.metric(), Metric::Cosine);
        let mut out = Vec::new();
        write_embeddings(&idx, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "2 cosine\na 1 0\nb 0 1\n");
        assert_eq!(parse_embeddings("1 dot\nx 2.5\n").unwrap().metric(), Metric::Dot);
    }

    #[test]
    fn errors() {
        for (text, line) in [
            ("2 cosine\na 1\n", Some(2)),
            ("2 cosine\na 1 0\na 0 1\n", Some(3)),
            ("2 euclid\n", Some(1)),
            ("0 cosine\n", Some(1)),
            ("2 cosine\na 1 x\n", Some(2)),
            ("", None),
        ] {
            assert_eq!(parse_embeddings(text).unwrap_err().line, line, "{text:?}");
        }
    }

    #[test]
    fn word_vectors() {
        let e = parse_word_vectors("2 2\nkanye 1 0\nwest 0 1\n").unwrap();
        assert_eq!(e.vocabulary_size(), 2);
        assert!(parse_word_vectors("1 2\nx 1\n").is_err());
    }
}

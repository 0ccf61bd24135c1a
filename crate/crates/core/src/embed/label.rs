use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::hash::Hasher;

use crate::text::normalize;
use crate::vector;

/// Maps an entity label to a fixed-length vector for string-similarity
/// features.
pub trait LabelEmbedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
}

/// Character n-grams (with `<`/`>` boundary marks) hashed into a fixed
/// number of buckets, counted, then L2-normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedNgramEmbedder {
    pub dim: usize,
    pub min_n: usize,
    pub max_n: usize,
}

impl Default for HashedNgramEmbedder {
    fn default() -> Self {
        Self {
            dim: 128,
            min_n: 3,
            max_n: 5,
        }
    }
}

impl HashedNgramEmbedder {
    /// Bucket of every n-gram of `text`, with multiplicity.
    pub fn ngram_buckets(&self, text: &str) -> Vec<usize> {
        let chars: Vec<char> = core::iter::once('<')
            .chain(normalize(text).chars())
            .chain(core::iter::once('>'))
            .collect();
        let mut out = Vec::new();
        let mut buf = String::new();
        for n in self.min_n..=self.max_n {
            for window in chars.windows(n) {
                buf.clear();
                buf.extend(window);
                out.push(bucket(&buf, self.dim));
            }
        }
        out
    }

    pub fn distinct_buckets(&self, text: &str) -> BTreeSet<usize> {
        self.ngram_buckets(text).into_iter().collect()
    }
}

pub(crate) fn bucket(token: &str, dim: usize) -> usize {
    let mut h = fnv::FnvHasher::default();
    h.write(token.as_bytes());
    (h.finish() % dim as u64) as usize
}

impl LabelEmbedder for HashedNgramEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = alloc::vec![0.0; self.dim];
        for b in self.ngram_buckets(text) {
            v[b] += 1.0;
        }
        vector::normalized(v)
    }
}

/// Averages pretrained word vectors (e.g. fastText `.vec` files) over the
/// whitespace tokens of the normalised label. Labels with no known token
/// map to the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainedLabelEmbedder {
    dim: usize,
    words: BTreeMap<String, Vec<f64>>,
}

impl PretrainedLabelEmbedder {
    /// Words are lowercased; vectors of the wrong length are skipped.
    pub fn new(dim: usize, words: impl IntoIterator<Item = (String, Vec<f64>)>) -> Self {
        let words = words
            .into_iter()
            .filter(|(_, v)| v.len() == dim)
            .map(|(w, v)| (normalize(&w), v))
            .collect();
        Self { dim, words }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.words.len()
    }
}

impl LabelEmbedder for PretrainedLabelEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let mut acc = alloc::vec![0.0; self.dim];
        for token in normalize(text).split(' ') {
            if let Some(v) = self.words.get(token) {
                acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
            }
        }
        vector::normalized(acc)
    }
}

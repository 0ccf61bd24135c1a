//! Row completion for relational entity tables.
//!
//! Given a table whose first column names entities, this crate links the
//! table to a local knowledge base, proposes new subject entities by
//! combining embedding neighbourhoods with language-model generations,
//! ranks them with an unsupervised outlier detector, and fills the
//! remaining cells with values that carry provenance: either a knowledge
//! base triple or a web snippet scored against the seed rows.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, HTTP
//! clients and the command-line harness live in the `rowcomp` crate.
//! External services are reached through the traits in [`clients`].

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod clients;
pub mod embed;
pub mod gapfill;
pub mod interpret;
pub mod kb;
pub mod metrics;
pub mod suggest;
pub mod text;
pub mod vector;

pub use clients::{
    ClientError, Generation, GenerationRequest, HashingSentenceEncoder, MockGenerator, MockSearch,
    SearchEngine, SearchSnippet, SentenceEncoder, Services, SnippetSource, SourceFilter,
    TextGenerator,
};
pub use embed::{EmbeddingError, EmbeddingIndex, HashedNgramEmbedder, LabelEmbedder, Metric, Neighbor};
pub use gapfill::{GapFill, GapFillConfig, GapFiller, Provenance, SeedContext};
pub use interpret::{LinkConfig, LinkFailure, LinkedTable, Table, TableError};
pub use kb::{EntityId, KbBuilder, KbError, KnowledgeBase, ObjectValue, PropertyId, Quantity, Triple, Unit};
pub use suggest::{Candidate, CandidateSource, FeatureVector, RankedSuggestion, SuggestConfig};

//! File formats, HTTP clients and the command pipeline around
//! `rowcomp-core`.

pub mod config;
pub mod formats;
pub mod http;
pub mod pipeline;

pub use config::PipelineConfig;
pub use formats::FormatError;

//! Curation pipeline for code pretraining corpora.
//!
//! Raw code files, issue threads and natural-language documents flow through
//! a fixed sequence of stages: language and license allowlists, code quality
//! rules, exact and near-duplicate removal, HAP keyword filtering, PII
//! redaction, fill-in-the-middle sample construction and token-budgeted
//! mixture sampling. Every stage is deterministic for a given seed and emits a
//! manifest with reason-coded drop counts.

pub mod corpus_io;
pub mod dedup;
pub mod error;
pub mod fim;
pub mod mixture;
pub mod pipeline;
pub mod quality;
pub mod safety;
pub mod seed;
pub mod verdict;

pub use corpus_io::{Document, LanguageTag, PipelineManifest, SourceKind};
pub use error::{Error, Result};
pub use verdict::FilterVerdict;

//! Corpus records: documents, language assignment, allowlist filters,
//! line-delimited record files and stage manifests.

mod document;
mod filters;
mod language;
mod manifest;
mod records;

pub use document::{Document, SourceKind};
pub use filters::{default_permissive, filter_language, filter_license, DEFAULT_PERMISSIVE};
pub use language::{assign_language, ExtensionMap, LanguageTag, LANGUAGES};
pub(crate) use manifest::hex;
pub use manifest::{config_digest, LanguageStats, PipelineManifest};
pub use records::{read_all, read_records, write_records, Record, RecordReader, RecordWriter};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::language::LanguageTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Code,
    Issue,
    NaturalLanguage,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Code => "code",
            SourceKind::Issue => "issue",
            SourceKind::NaturalLanguage => "natural_language",
        })
    }
}

/// One corpus record. Field names match the on-disk JSON line format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub path: String,
    pub content: String,
    pub repo_id: String,
    #[serde(default)]
    pub license: Option<String>,
    pub source_kind: SourceKind,
    #[serde(default)]
    pub language: Option<LanguageTag>,
    #[serde(default)]
    pub annotations: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, path: impl Into<String>, content: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            path: path.into(),
            content: content.into(),
            repo_id: String::new(),
            license: None,
            source_kind: SourceKind::Code,
            language: None,
            annotations: BTreeMap::new(),
        }
    }

    pub fn with_kind(mut self, kind: SourceKind) -> Self {
        self.source_kind = kind;
        self
    }

    pub fn with_license(mut self, license: impl Into<String>) -> Self {
        self.license = Some(license.into());
        self
    }

    pub fn with_language(mut self, language: LanguageTag) -> Self {
        self.language = (!language.is_unknown()).then_some(language);
        self
    }

    pub fn with_repo(mut self, repo: impl Into<String>) -> Self {
        self.repo_id = repo.into();
        self
    }

    pub fn char_len(&self) -> usize {
        self.content.chars().count()
    }

    /// Language carried by the record, or `unknown`.
    pub fn language_or_unknown(&self) -> LanguageTag {
        self.language.unwrap_or(LanguageTag::UNKNOWN)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if let Some(lang) = self.language {
            if self.source_kind != SourceKind::Code {
                return Err(format!("language set on a {} record", self.source_kind));
            }
            if lang.is_unknown() {
                return Err("language `unknown` must be stored as absent".into());
            }
        }
        Ok(())
    }
}

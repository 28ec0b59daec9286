use std::collections::BTreeSet;
use std::path::Path;

use aho_corasick::{AhoCorasick, MatchKind};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verdict::{reason, FilterVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    WholeToken,
    Substring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HapConfig {
    pub dictionary: BTreeSet<String>,
    pub threshold: u64,
    pub match_mode: MatchMode,
}

impl Default for HapConfig {
    fn default() -> Self {
        HapConfig {
            dictionary: BTreeSet::new(),
            threshold: 2,
            match_mode: MatchMode::WholeToken,
        }
    }
}

/// Reads a keyword list: one keyword per line, blank lines ignored,
/// lowercased.
pub fn load_dictionary(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

/// Compiled keyword matcher.
#[derive(Debug, Clone)]
pub struct HapMatcher {
    automaton: Option<AhoCorasick>,
    mode: MatchMode,
    threshold: u64,
}

impl HapMatcher {
    pub fn new(cfg: &HapConfig) -> Result<Self> {
        let automaton = if cfg.dictionary.is_empty() {
            None
        } else {
            let words: Vec<String> = cfg.dictionary.iter().map(|w| w.to_lowercase()).collect();
            Some(
                AhoCorasick::builder()
                    .match_kind(MatchKind::Standard)
                    .build(&words)
                    .map_err(|e| Error::Config(format!("HAP dictionary: {e}")))?,
            )
        };
        Ok(HapMatcher {
            automaton,
            mode: cfg.match_mode,
            threshold: cfg.threshold,
        })
    }

    /// Case-insensitive count of keyword occurrences anywhere in the text,
    /// comments included.
    pub fn count(&self, content: &str) -> u64 {
        let Some(ac) = &self.automaton else {
            return 0;
        };
        let lower = content.to_lowercase();
        ac.find_overlapping_iter(&lower)
            .filter(|m| match self.mode {
                MatchMode::Substring => true,
                MatchMode::WholeToken => {
                    let before = lower[..m.start()].chars().next_back();
                    let after = lower[m.end()..].chars().next();
                    !before.is_some_and(char::is_alphabetic)
                        && !after.is_some_and(char::is_alphabetic)
                }
            })
            .count() as u64
    }

    /// Drops a document whose count exceeds the threshold.
    pub fn verdict(&self, count: u64) -> FilterVerdict {
        if count > self.threshold {
            FilterVerdict::drop(reason::HAP_EXCEEDED)
        } else {
            FilterVerdict::keep()
        }
    }
}

pub fn hap_count(content: &str, cfg: &HapConfig) -> Result<u64> {
    Ok(HapMatcher::new(cfg)?.count(content))
}

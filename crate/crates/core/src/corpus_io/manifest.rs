use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::verdict::FilterVerdict;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageStats {
    pub docs: u64,
    pub tokens: u64,
}

/// Per-stage audit record.
///
/// A document dropped for several reasons at once is counted under the
/// `+`-joined combination (e.g. `low_alpha+structured_size`), so the reason
/// counts always sum to `dropped_count` while still naming every violated
/// rule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub stage_name: String,
    pub input_count: u64,
    pub kept_count: u64,
    pub dropped_count: u64,
    pub drop_reasons: BTreeMap<String, u64>,
    pub config_digest: String,
    pub seed: u64,
    #[serde(default)]
    pub skipped: bool,
    /// Non-drop events (fallbacks, per-mode tallies, per-rule hits).
    #[serde(default)]
    pub counters: BTreeMap<String, u64>,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Kept documents per language (`unknown` for non-code records).
    #[serde(default)]
    pub languages: BTreeMap<String, LanguageStats>,
    /// Cluster size -> number of clusters, for dedup stages.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub cluster_sizes: BTreeMap<u64, u64>,
}

impl PipelineManifest {
    pub fn new(stage: &str, config_digest: String, seed: u64) -> Self {
        PipelineManifest {
            stage_name: stage.to_string(),
            config_digest,
            seed,
            ..Default::default()
        }
    }

    pub fn record(&mut self, verdict: &FilterVerdict) {
        self.input_count += 1;
        if verdict.keep {
            self.kept_count += 1;
        } else {
            self.dropped_count += 1;
            *self
                .drop_reasons
                .entry(verdict.reasons.join("+"))
                .or_default() += 1;
            if verdict.reasons.len() > 1 {
                for r in &verdict.reasons {
                    self.bump(&format!("rule:{r}"), 1);
                }
            }
        }
    }

    pub fn record_kept(&mut self) {
        self.record(&FilterVerdict::keep());
    }

    pub fn bump(&mut self, counter: &str, by: u64) {
        *self.counters.entry(counter.to_string()).or_default() += by;
    }

    pub fn add_language(&mut self, lang: &str, tokens: u64) {
        let e = self.languages.entry(lang.to_string()).or_default();
        e.docs += 1;
        e.tokens += tokens;
    }

    /// Verifies the count identities.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.input_count != self.kept_count + self.dropped_count {
            return Err(format!(
                "{}: input {} != kept {} + dropped {}",
                self.stage_name, self.input_count, self.kept_count, self.dropped_count
            ));
        }
        let sum: u64 = self.drop_reasons.values().sum();
        if sum != self.dropped_count {
            return Err(format!(
                "{}: drop reasons sum to {} but dropped {}",
                self.stage_name, sum, self.dropped_count
            ));
        }
        Ok(())
    }

    pub fn path_in(dir: &Path, stage: &str) -> PathBuf {
        dir.join("manifest").join(format!("{stage}.json"))
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = Self::path_in(out_dir, &self.stage_name);
        let parent = path.parent().expect("manifest path has a parent");
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::MalformedRecord {
            line: e.line(),
            offset: 0,
            message: format!("{}: {e}", path.display()),
        })
    }
}

/// SHA-256 over the key-sorted JSON form of a configuration value.
pub fn config_digest<T: Serialize>(cfg: &T) -> String {
    let value = serde_json::to_value(cfg).expect("config serializes");
    let mut h = Sha256::new();
    write_canonical(&value, &mut h);
    hex(&h.finalize())
}

fn write_canonical(v: &Value, h: &mut Sha256) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<_> = map.keys().collect();
            keys.sort();
            h.update(b"{");
            for k in keys {
                h.update(serde_json::to_string(k).unwrap().as_bytes());
                h.update(b":");
                write_canonical(&map[k], h);
                h.update(b",");
            }
            h.update(b"}");
        }
        Value::Array(items) => {
            h.update(b"[");
            for i in items {
                write_canonical(i, h);
                h.update(b",");
            }
            h.update(b"]");
        }
        other => h.update(other.to_string().as_bytes()),
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes
        .iter()
        .fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus_io::{LanguageTag, DEFAULT_PERMISSIVE};
use crate::dedup::DedupConfig;
use crate::error::{Error, Result};
use crate::fim::FimConfig;
use crate::mixture::{MixtureSpec, TokenCounter, PIPELINE_SOURCE};
use crate::quality::{IssueConfig, QualityConfig};
use crate::safety::{load_dictionary, HapConfig, MatchMode, PiiTokens, ScanConfig};

use super::Stage;

/// Per-stage switches. A disabled stage passes its input through unchanged
/// and writes a manifest marked `skipped`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub license_language: bool,
    pub quality: bool,
    pub exact_dedup: bool,
    pub fuzzy_dedup: bool,
    pub hap: bool,
    pub pii: bool,
    pub malware: bool,
    pub fim: bool,
    pub mix: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            license_language: true,
            quality: true,
            exact_dedup: true,
            fuzzy_dedup: true,
            hap: true,
            pii: true,
            malware: true,
            fim: true,
            mix: true,
        }
    }
}

impl StageToggles {
    pub fn none() -> Self {
        StageToggles {
            license_language: false,
            quality: false,
            exact_dedup: false,
            fuzzy_dedup: false,
            hap: false,
            pii: false,
            malware: false,
            fim: false,
            mix: false,
        }
    }

    pub fn get(&self, stage: Stage) -> bool {
        match stage {
            Stage::Ingest => true,
            Stage::LicenseLanguage => self.license_language,
            Stage::Quality => self.quality,
            Stage::ExactDedup => self.exact_dedup,
            Stage::FuzzyDedup => self.fuzzy_dedup,
            Stage::Hap => self.hap,
            Stage::Pii => self.pii,
            Stage::Malware => self.malware,
            Stage::Fim => self.fim,
            Stage::Mix => self.mix,
        }
    }

    pub fn set(&mut self, stage: Stage, on: bool) {
        let slot = match stage {
            Stage::Ingest => return,
            Stage::LicenseLanguage => &mut self.license_language,
            Stage::Quality => &mut self.quality,
            Stage::ExactDedup => &mut self.exact_dedup,
            Stage::FuzzyDedup => &mut self.fuzzy_dedup,
            Stage::Hap => &mut self.hap,
            Stage::Pii => &mut self.pii,
            Stage::Malware => &mut self.malware,
            Stage::Fim => &mut self.fim,
            Stage::Mix => &mut self.mix,
        };
        *slot = on;
    }

    /// Enables exactly the given stages.
    pub fn only(stages: &[Stage]) -> Self {
        let mut t = Self::none();
        for &s in stages {
            t.set(s, true);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    /// Allowed languages; absent means all 116.
    pub languages: Option<Vec<String>>,
    pub permissive_licenses: Vec<String>,
    /// One license identifier per line; replaces `permissive_licenses`.
    pub license_file: Option<PathBuf>,
}

impl Default for FilterSection {
    fn default() -> Self {
        FilterSection {
            languages: None,
            permissive_licenses: DEFAULT_PERMISSIVE.iter().map(|s| s.to_string()).collect(),
            license_file: None,
        }
    }
}

impl FilterSection {
    pub fn allowlist(&self) -> Result<BTreeSet<LanguageTag>> {
        match &self.languages {
            None => Ok(LanguageTag::all_set()),
            Some(names) => names.iter().map(|n| LanguageTag::new(n)).collect(),
        }
    }

    pub fn permissive(&self) -> Result<BTreeSet<String>> {
        match &self.license_file {
            None => Ok(self.permissive_licenses.iter().cloned().collect()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Ok(text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(String::from)
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HapSection {
    pub keywords: Vec<String>,
    pub dictionary_file: Option<PathBuf>,
    pub threshold: u64,
    pub match_mode: MatchMode,
}

impl Default for HapSection {
    fn default() -> Self {
        let base = HapConfig::default();
        HapSection {
            keywords: Vec::new(),
            dictionary_file: None,
            threshold: base.threshold,
            match_mode: base.match_mode,
        }
    }
}

impl HapSection {
    pub fn resolve(&self) -> Result<HapConfig> {
        let mut dictionary: BTreeSet<String> = self
            .keywords
            .iter()
            .map(|k| k.trim().to_lowercase())
            .filter(|k| !k.is_empty())
            .collect();
        if let Some(p) = &self.dictionary_file {
            dictionary.extend(load_dictionary(p)?);
        }
        Ok(HapConfig {
            dictionary,
            threshold: self.threshold,
            match_mode: self.match_mode,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiiSection {
    pub tokens: PiiTokens,
}

/// Full pipeline configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub workers: usize,
    /// Write only the last stage's records instead of every stage's.
    pub streaming: bool,
    /// Cycle mixture sources instead of stopping when one runs dry.
    pub repeat: bool,
    pub stages: StageToggles,
    pub filter: FilterSection,
    pub quality: QualityConfig,
    pub issue: IssueConfig,
    pub dedup: DedupConfig,
    pub hap: HapSection,
    pub pii: PiiSection,
    pub malware: ScanConfig,
    pub fim: FimConfig,
    pub tokens: TokenCounter,
    pub mixture: Option<MixtureSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            output: None,
            seed: 0,
            workers: 1,
            streaming: false,
            repeat: false,
            stages: StageToggles::default(),
            filter: FilterSection::default(),
            quality: QualityConfig::default(),
            issue: IssueConfig::default(),
            dedup: DedupConfig::default(),
            hap: HapSection::default(),
            pii: PiiSection::default(),
            malware: ScanConfig::default(),
            fim: FimConfig::default(),
            tokens: TokenCounter::default(),
            mixture: None,
        }
    }
}

fn must_exist(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Resolves relative paths against the config file's directory.
    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        for p in [
            &mut self.input,
            &mut self.output,
            &mut self.filter.license_file,
            &mut self.hap.dictionary_file,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let Some(m) = &mut self.mixture {
            for c in &mut m.components {
                if c.source != PIPELINE_SOURCE && Path::new(&c.source).is_relative() {
                    c.source = dir.join(&c.source).to_string_lossy().into_owned();
                }
            }
        }
    }

    /// Fails for seeds above `i64::MAX`, which TOML integers cannot hold.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config to TOML: {e}")))
    }

    /// Checks every section and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if let Some(p) = &self.input {
            must_exist(p, "input")?;
        }
        if let Some(p) = &self.filter.license_file {
            must_exist(p, "license file")?;
        }
        if let Some(p) = &self.hap.dictionary_file {
            must_exist(p, "HAP dictionary")?;
        }
        self.filter.allowlist()?;
        self.quality.validate()?;
        self.issue.validate()?;
        self.dedup.validate()?;
        self.fim.validate()?;
        self.tokens.validate()?;
        if let Some(m) = &self.mixture {
            m.validate()?;
            for c in &m.components {
                if c.source != PIPELINE_SOURCE {
                    must_exist(Path::new(&c.source), "mixture source")?;
                }
            }
        }
        if self.stages.malware
            && self
                .malware
                .command
                .as_deref()
                .is_some_and(|c| c.trim().is_empty())
        {
            return Err(Error::Config("malware.command is empty".into()));
        }
        Ok(())
    }
}

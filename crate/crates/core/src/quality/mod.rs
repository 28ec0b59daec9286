//! Code quality rules and issue-thread filters.
//!
//! Every rule is a pure function of the document and its configuration.
//! [`apply_quality`] evaluates every applicable rule and unions the reasons.

mod html;
mod issue;

use serde::{Deserialize, Serialize};

pub use html::visible_text;
pub use issue::{
    filter_issue, parse_thread, stopword_fraction, Comment, IssueConfig, IssueOutcome,
};

use crate::corpus_io::{assign_language, Document, LanguageTag, SourceKind};
use crate::error::{Error, Result};
use crate::verdict::{reason, FilterVerdict};

pub const XML_NEEDLE: &str = "<?xml version=";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityConfig {
    pub min_alpha_fraction: f64,
    pub xml_probe_chars: usize,
    pub html_visible_min_fraction: f64,
    pub html_visible_min_chars: usize,
    pub structured_min_chars: usize,
    pub structured_max_chars: usize,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            min_alpha_fraction: 0.25,
            xml_probe_chars: 100,
            html_visible_min_fraction: 0.20,
            html_visible_min_chars: 100,
            structured_min_chars: 50,
            structured_max_chars: 5000,
        }
    }
}

impl QualityConfig {
    pub fn validate(&self) -> Result<()> {
        let ratio_ok = |r: f64| (0.0..=1.0).contains(&r);
        if !ratio_ok(self.min_alpha_fraction) || !ratio_ok(self.html_visible_min_fraction) {
            return Err(Error::Config("quality ratios must lie in [0,1]".into()));
        }
        if self.xml_probe_chars == 0
            || self.html_visible_min_chars == 0
            || self.structured_min_chars == 0
            || self.structured_max_chars == 0
        {
            return Err(Error::Config("quality counts must be positive".into()));
        }
        if self.structured_min_chars > self.structured_max_chars {
            return Err(Error::Config(
                "structured_min_chars exceeds structured_max_chars".into(),
            ));
        }
        Ok(())
    }
}

fn lang(name: &str) -> LanguageTag {
    LanguageTag::new(name).expect("builtin language name")
}

fn doc_language(doc: &Document) -> LanguageTag {
    doc.language.unwrap_or_else(|| assign_language(&doc.path))
}

/// Share of Unicode alphabetic scalar values; 0 for empty text.
pub fn alphabetic_fraction(content: &str) -> f64 {
    let (mut letters, mut total) = (0usize, 0usize);
    for c in content.chars() {
        total += 1;
        if c.is_alphabetic() {
            letters += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        letters as f64 / total as f64
    }
}

pub fn rule_min_alpha(doc: &Document, cfg: &QualityConfig) -> FilterVerdict {
    if alphabetic_fraction(&doc.content) < cfg.min_alpha_fraction {
        FilterVerdict::drop(reason::LOW_ALPHA)
    } else {
        FilterVerdict::keep()
    }
}

pub fn rule_xml_header(doc: &Document, cfg: &QualityConfig) -> FilterVerdict {
    if doc_language(doc) == lang("XSLT") {
        return FilterVerdict::keep();
    }
    // A match starting before the probe limit ends within this many chars.
    let window_chars = cfg.xml_probe_chars + XML_NEEDLE.len() - 1;
    let window_end = doc
        .content
        .char_indices()
        .nth(window_chars)
        .map_or(doc.content.len(), |(i, _)| i);
    let window = &doc.content[..window_end];
    match window.find(XML_NEEDLE) {
        Some(byte_idx) if window[..byte_idx].chars().count() < cfg.xml_probe_chars => {
            FilterVerdict::drop(reason::XML_HEADER)
        }
        _ => FilterVerdict::keep(),
    }
}

pub fn rule_html_visible(doc: &Document, cfg: &QualityConfig) -> FilterVerdict {
    let total = doc.char_len();
    let visible = visible_text(&doc.content).chars().count();
    let fraction = if total == 0 {
        0.0
    } else {
        visible as f64 / total as f64
    };
    if visible >= cfg.html_visible_min_chars && fraction >= cfg.html_visible_min_fraction {
        FilterVerdict::keep()
    } else {
        FilterVerdict::drop(reason::HTML_LOW_VISIBLE)
    }
}

pub fn rule_structured_size(doc: &Document, cfg: &QualityConfig) -> FilterVerdict {
    let n = doc.char_len();
    if (cfg.structured_min_chars..=cfg.structured_max_chars).contains(&n) {
        FilterVerdict::keep()
    } else {
        FilterVerdict::drop(reason::STRUCTURED_SIZE)
    }
}

/// A single code rule, as dispatched by [`code_rules`].
pub type CodeRule = fn(&Document, &QualityConfig) -> FilterVerdict;

/// The code rules that apply to a code document of the given language.
pub fn code_rules(language: LanguageTag) -> Vec<CodeRule> {
    let mut rules: Vec<CodeRule> = vec![rule_min_alpha, rule_xml_header];
    if language == lang("HTML") {
        rules.push(rule_html_visible);
    }
    if language == lang("JSON") || language == lang("YAML") {
        rules.push(rule_structured_size);
    }
    rules
}

/// Result of the quality stage: the verdict plus, for issues, the rewritten
/// thread content.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityOutcome {
    pub verdict: FilterVerdict,
    pub content: Option<String>,
}

pub fn apply_quality(
    doc: &Document,
    cfg: &QualityConfig,
    issue_cfg: &IssueConfig,
) -> Result<QualityOutcome> {
    match doc.source_kind {
        SourceKind::Code => {
            let verdict =
                FilterVerdict::all(code_rules(doc_language(doc)).iter().map(|r| r(doc, cfg)));
            Ok(QualityOutcome {
                verdict,
                content: None,
            })
        }
        SourceKind::Issue => {
            let out = filter_issue(&doc.content, issue_cfg)?;
            let content = (out.content != doc.content).then_some(out.content);
            Ok(QualityOutcome {
                verdict: out.verdict,
                content,
            })
        }
        SourceKind::NaturalLanguage => Ok(QualityOutcome {
            verdict: FilterVerdict::keep(),
            content: None,
        }),
    }
}

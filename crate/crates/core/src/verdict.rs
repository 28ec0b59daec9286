use serde::{Deserialize, Serialize};

/// Keep/drop decision produced by every filter. `reasons` is empty exactly
/// when the document is kept.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub keep: bool,
    pub reasons: Vec<String>,
}

impl FilterVerdict {
    pub fn keep() -> Self {
        FilterVerdict {
            keep: true,
            reasons: Vec::new(),
        }
    }

    pub fn drop(reason: impl Into<String>) -> Self {
        FilterVerdict {
            keep: false,
            reasons: vec![reason.into()],
        }
    }

    pub fn is_kept(&self) -> bool {
        self.keep
    }

    /// Union of two verdicts. Reason codes keep first-seen order and are not
    /// repeated.
    pub fn merge(mut self, other: FilterVerdict) -> Self {
        for r in other.reasons {
            if !self.reasons.contains(&r) {
                self.reasons.push(r);
            }
        }
        self.keep = self.reasons.is_empty();
        self
    }

    pub fn all(verdicts: impl IntoIterator<Item = FilterVerdict>) -> Self {
        verdicts
            .into_iter()
            .fold(FilterVerdict::keep(), FilterVerdict::merge)
    }
}

/// Closed set of reason codes that can appear in a verdict or manifest.
pub mod reason {
    pub const LANG_NOT_ALLOWED: &str = "lang_not_allowed";
    pub const LICENSE_MISSING: &str = "license_missing";
    pub const LICENSE_NOT_PERMISSIVE: &str = "license_not_permissive";
    pub const LOW_ALPHA: &str = "low_alpha";
    pub const XML_HEADER: &str = "xml_header";
    pub const HTML_LOW_VISIBLE: &str = "html_low_visible";
    pub const STRUCTURED_SIZE: &str = "structured_size";
    pub const NON_ENGLISH: &str = "non_english";
    pub const LOW_ENGAGEMENT: &str = "low_engagement";
    pub const ISSUE_FORMAT: &str = "issue_format";
    pub const EXACT_DUP: &str = "exact_dup";
    pub const FUZZY_DUP: &str = "fuzzy_dup";
    pub const HAP_EXCEEDED: &str = "hap_exceeded";
    pub const MALWARE: &str = "malware";

    pub const ALL: &[&str] = &[
        LANG_NOT_ALLOWED,
        LICENSE_MISSING,
        LICENSE_NOT_PERMISSIVE,
        LOW_ALPHA,
        XML_HEADER,
        HTML_LOW_VISIBLE,
        STRUCTURED_SIZE,
        NON_ENGLISH,
        LOW_ENGAGEMENT,
        ISSUE_FORMAT,
        EXACT_DUP,
        FUZZY_DUP,
        HAP_EXCEEDED,
        MALWARE,
    ];
}

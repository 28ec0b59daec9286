use std::collections::BTreeSet;

use super::document::Document;
use super::language::{assign_language, LanguageTag};
use crate::verdict::{reason, FilterVerdict};

pub const DEFAULT_PERMISSIVE: [&str; 6] = [
    "MIT",
    "Apache-2.0",
    "BSD-2-Clause",
    "BSD-3-Clause",
    "ISC",
    "Unlicense",
];

pub fn default_permissive() -> BTreeSet<String> {
    DEFAULT_PERMISSIVE.iter().map(|s| s.to_string()).collect()
}

/// Keeps a code document iff the language derived from its path is allowed.
/// `unknown` is never a member of a meaningful allowlist.
pub fn filter_language(doc: &Document, allowlist: &BTreeSet<LanguageTag>) -> FilterVerdict {
    let lang = assign_language(&doc.path);
    if !lang.is_unknown() && allowlist.contains(&lang) {
        FilterVerdict::keep()
    } else {
        FilterVerdict::drop(reason::LANG_NOT_ALLOWED)
    }
}

pub fn filter_license(doc: &Document, permissive: &BTreeSet<String>) -> FilterVerdict {
    match &doc.license {
        None => FilterVerdict::drop(reason::LICENSE_MISSING),
        Some(l) if permissive.contains(l) => FilterVerdict::keep(),
        Some(_) => FilterVerdict::drop(reason::LICENSE_NOT_PERMISSIVE),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn language_allowlist() {
        let all = LanguageTag::all_set();
        assert!(filter_language(&Document::new("1", "x.py", ""), &all).keep);
        let v = filter_language(&Document::new("1", "x.py", ""), &BTreeSet::new());
        assert_eq!(v.reasons, vec!["lang_not_allowed"]);
        let v = filter_language(&Document::new("1", "x.qqq", ""), &all);
        assert_eq!(v.reasons, vec!["lang_not_allowed"]);
        let mut with_unknown = all.clone();
        with_unknown.insert(LanguageTag::UNKNOWN);
        assert!(!filter_language(&Document::new("1", "x.qqq", ""), &with_unknown).keep);
    }

    #[test]
    fn license_allowlist() {
        let doc = Document::new("1", "a.rs", "");
        let permissive = default_permissive();
        assert!(filter_license(&doc.clone().with_license("Apache-2.0"), &permissive).keep);
        assert_eq!(
            filter_license(&doc, &permissive).reasons,
            vec!["license_missing"]
        );
        let narrow: BTreeSet<String> = ["MIT", "Apache-2.0"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            filter_license(&doc.with_license("GPL-3.0"), &narrow).reasons,
            vec!["license_not_permissive"]
        );
    }
}

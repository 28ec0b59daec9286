//! Rule-based PII detection.

use std::collections::BTreeMap;
use std::net::{Ipv4Addr, Ipv6Addr};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus_io::SourceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiiKind {
    Email,
    IpAddress,
    Key,
    Name,
    Username,
    Password,
}

/// A detected span. Offsets count Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiiSpan {
    pub kind: PiiKind,
    pub start: usize,
    pub end: usize,
    pub matched_text: String,
}

/// Replacement strings for each redacted kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PiiTokens {
    pub name: String,
    pub email: String,
    pub key: String,
    pub password: String,
}

impl Default for PiiTokens {
    fn default() -> Self {
        PiiTokens {
            name: "<NAME>".into(),
            email: "<EMAIL>".into(),
            key: "<KEY>".into(),
            password: "<PASSWORD>".into(),
        }
    }
}

impl PiiTokens {
    pub fn for_kind(&self, kind: PiiKind) -> Option<&str> {
        match kind {
            PiiKind::Email => Some(&self.email),
            PiiKind::Key => Some(&self.key),
            PiiKind::Password => Some(&self.password),
            PiiKind::Name | PiiKind::Username => Some(&self.name),
            PiiKind::IpAddress => None,
        }
    }

    fn is_token(&self, s: &str) -> bool {
        s == self.name || s == self.email || s == self.key || s == self.password
    }
}

/// Swappable detection backend.
pub trait PiiDetector: Send + Sync {
    fn detect(&self, content: &str, kind: SourceKind) -> Vec<PiiSpan>;
}

struct Patterns {
    email: Regex,
    ipv4: Regex,
    ipv6: Regex,
    prefixed_keys: Vec<Regex>,
    pem: Regex,
    assigned_secret: Regex,
    password: Regex,
    username: Regex,
    handle: Regex,
    author: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| {
        let r = |s: &str| Regex::new(s).expect("builtin PII pattern");
        // Value alternatives: "..", '..', \"..\" (inside JSON strings), bare.
        let value = r#"(?:"([^"\\\n]+)"|'([^'\n]+)'|\\"([^"\\\n]+)\\"|([^\s"'`,;()\[\]{}\\]+))"#;
        Patterns {
            email: r(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,}"),
            ipv4: r(r"\b(?:\d{1,3}\.){3}\d{1,3}\b"),
            ipv6: r(r"(?:[0-9A-Fa-f]{0,4}:){2,7}[0-9A-Fa-f]{0,4}"),
            prefixed_keys: [
                r"\bAKIA[0-9A-Z]{16}\b",
                r"\bgh[pousr]_[A-Za-z0-9]{36,255}\b",
                r"\bgithub_pat_[A-Za-z0-9_]{22,255}\b",
                r"\bsk-[A-Za-z0-9_\-]{20,}",
                r"\bsk_live_[A-Za-z0-9]{20,}\b",
                r"\bxox[abprs]-[A-Za-z0-9\-]{16,}",
                r"\bAIza[0-9A-Za-z_\-]{35}",
            ]
            .iter()
            .map(|p| r(p))
            .collect(),
            pem: r(r"(?s)-----BEGIN (?:[A-Z]+ )*PRIVATE KEY-----.*?-----END (?:[A-Z]+ )*PRIVATE KEY-----"),
            assigned_secret: r(&format!(
                r#"(?i)\b[a-z0-9_]*(?:api|secret|access|auth|private|client)[_\-]?(?:key|token|secret)\b["']?\s*(?:=>|==|=|:)\s*{value}"#
            )),
            password: r(&format!(
                r#"(?i)\b[a-z0-9_]*(?:password|passwd|pwd)[a-z0-9_]*\b["']?\s*(?:=>|==|=|:)\s*{value}"#
            )),
            username: r(
                r#"(?i)\b[a-z0-9_]*(?:user|username|user_name|login)\b["']?\s*(?:=>|=|:)\s*(?:"([^"\\\n]+)"|'([^'\n]+)'|\\"([^"\\\n]+)\\")"#,
            ),
            handle: r(r"(?:^|[^A-Za-z0-9_.@/])@([A-Za-z0-9][A-Za-z0-9\-]{0,38})\b"),
            author: r(r#""(?:author|user|name)"\s*:\s*"([^"\\\n]+)""#),
        }
    })
}

/// Values that look like code rather than secrets.
const BARE_VALUE_STOPLIST: &[&str] = &[
    "None",
    "null",
    "nil",
    "true",
    "false",
    "undefined",
    "str",
    "string",
    "String",
    "int",
    "bool",
    "Optional",
    "=",
];

fn shannon_entropy(s: &str) -> f64 {
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    let mut n = 0usize;
    for c in s.chars() {
        *counts.entry(c).or_default() += 1;
        n += 1;
    }
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Minimum bits per character for a token to count as a key.
pub const KEY_MIN_ENTROPY: f64 = 3.0;
pub const KEY_MIN_LEN: usize = 20;

fn looks_like_key(s: &str) -> bool {
    s.chars().count() >= KEY_MIN_LEN && shannon_entropy(s) >= KEY_MIN_ENTROPY
}

/// Deterministic regex and checksum based detector.
#[derive(Debug, Clone, Default)]
pub struct RuleDetector {
    pub tokens: PiiTokens,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    kind: PiiKind,
    start: usize,
    end: usize,
}

impl RuleDetector {
    pub fn new(tokens: PiiTokens) -> Self {
        RuleDetector { tokens }
    }

    fn assignment_values(
        &self,
        re: &Regex,
        content: &str,
        kind: PiiKind,
        accept: impl Fn(&str, bool) -> bool,
        out: &mut Vec<Candidate>,
    ) {
        for caps in re.captures_iter(content) {
            let whole = caps.get(0).expect("group 0");
            if whole.as_str().contains("==") {
                continue;
            }
            let Some((idx, m)) = (1..caps.len()).find_map(|i| caps.get(i).map(|m| (i, m))) else {
                continue;
            };
            let bare = idx == caps.len() - 1 && caps.len() == 5;
            let v = m.as_str();
            if self.tokens.is_token(v) || !accept(v, bare) {
                continue;
            }
            if bare {
                if BARE_VALUE_STOPLIST.contains(&v) {
                    continue;
                }
                let next = content[m.end()..].chars().next();
                if matches!(next, Some('(' | '.' | '[' | '=')) {
                    continue;
                }
            }
            out.push(Candidate {
                kind,
                start: m.start(),
                end: m.end(),
            });
        }
    }

    fn candidates(&self, content: &str, source: SourceKind) -> Vec<Candidate> {
        let p = patterns();
        let mut out = Vec::new();
        let bytes = content.as_bytes();

        for m in p.email.find_iter(content) {
            let local = &m.as_str()[..m.as_str().find('@').unwrap_or(0)];
            if local.is_empty() || local.starts_with('.') {
                continue;
            }
            out.push(Candidate {
                kind: PiiKind::Email,
                start: m.start(),
                end: m.end(),
            });
        }

        for m in p.ipv4.find_iter(content) {
            let prev = m.start().checked_sub(1).map(|i| bytes[i]);
            let next = bytes.get(m.end()).copied();
            let next2 = bytes.get(m.end() + 1).copied();
            if prev == Some(b'.')
                || (next == Some(b'.') && next2.is_some_and(|c| c.is_ascii_digit()))
            {
                continue;
            }
            if m.as_str().parse::<Ipv4Addr>().is_ok()
                || m.as_str()
                    .split('.')
                    .all(|o| o.parse::<u16>().is_ok_and(|v| v <= 255))
            {
                out.push(Candidate {
                    kind: PiiKind::IpAddress,
                    start: m.start(),
                    end: m.end(),
                });
            }
        }

        for m in p.ipv6.find_iter(content) {
            let s = m.as_str();
            let prev = m.start().checked_sub(1).map(|i| bytes[i]);
            let next = bytes.get(m.end()).copied();
            let boundary = |c: Option<u8>| {
                !c.is_some_and(|c| c.is_ascii_alphanumeric() || matches!(c, b'_' | b':' | b'.'))
            };
            if s.matches(':').count() >= 3
                && boundary(prev)
                && boundary(next)
                && s.parse::<Ipv6Addr>().is_ok()
            {
                out.push(Candidate {
                    kind: PiiKind::IpAddress,
                    start: m.start(),
                    end: m.end(),
                });
            }
        }

        for re in &p.prefixed_keys {
            for m in re.find_iter(content) {
                if looks_like_key(m.as_str()) {
                    out.push(Candidate {
                        kind: PiiKind::Key,
                        start: m.start(),
                        end: m.end(),
                    });
                }
            }
        }
        for m in p.pem.find_iter(content) {
            out.push(Candidate {
                kind: PiiKind::Key,
                start: m.start(),
                end: m.end(),
            });
        }
        self.assignment_values(
            &p.assigned_secret,
            content,
            PiiKind::Key,
            |v, _| looks_like_key(v),
            &mut out,
        );
        self.assignment_values(
            &p.password,
            content,
            PiiKind::Password,
            |_, _| true,
            &mut out,
        );
        self.assignment_values(
            &p.username,
            content,
            PiiKind::Username,
            |_, _| true,
            &mut out,
        );

        if source == SourceKind::Issue {
            for caps in p.handle.captures_iter(content) {
                let m = caps.get(1).expect("handle group");
                if !self.tokens.is_token(m.as_str()) {
                    out.push(Candidate {
                        kind: PiiKind::Username,
                        start: m.start(),
                        end: m.end(),
                    });
                }
            }
            for caps in p.author.captures_iter(content) {
                let m = caps.get(1).expect("author group");
                if !self.tokens.is_token(m.as_str()) {
                    out.push(Candidate {
                        kind: PiiKind::Name,
                        start: m.start(),
                        end: m.end(),
                    });
                }
            }
        }
        out
    }
}

/// Longest candidate first, then earliest; overlapping losers are dropped.
/// Returns survivors sorted by start.
fn resolve(mut cands: Vec<Candidate>) -> Vec<Candidate> {
    cands.sort_by(|a, b| {
        (b.end - b.start)
            .cmp(&(a.end - a.start))
            .then(a.start.cmp(&b.start))
            .then(a.kind.cmp(&b.kind))
    });
    let mut taken: BTreeMap<usize, Candidate> = BTreeMap::new();
    for c in cands {
        let clash_before = taken
            .range(..c.start)
            .next_back()
            .is_some_and(|(_, t)| t.end > c.start);
        let clash_after = taken.range(c.start..c.end).next().is_some();
        if !clash_before && !clash_after {
            taken.insert(c.start, c);
        }
    }
    taken.into_values().collect()
}

impl PiiDetector for RuleDetector {
    fn detect(&self, content: &str, source: SourceKind) -> Vec<PiiSpan> {
        let chosen = resolve(self.candidates(content, source));
        to_char_spans(content, chosen.iter().map(|c| (c.kind, c.start, c.end)))
    }
}

/// Converts byte-offset spans (sorted by start) into scalar-value spans.
fn to_char_spans(
    content: &str,
    spans: impl Iterator<Item = (PiiKind, usize, usize)>,
) -> Vec<PiiSpan> {
    let mut out = Vec::new();
    let mut byte = 0usize;
    let mut chars = 0usize;
    let mut advance = |target: usize| {
        chars += content[byte..target].chars().count();
        byte = target;
        chars
    };
    for (kind, s, e) in spans {
        let start = advance(s);
        let end = advance(e);
        out.push(PiiSpan {
            kind,
            start,
            end,
            matched_text: content[s..e].to_string(),
        });
    }
    out
}

/// Detects PII with the default rule set.
pub fn detect_pii(content: &str, source: SourceKind) -> Vec<PiiSpan> {
    RuleDetector::default().detect(content, source)
}

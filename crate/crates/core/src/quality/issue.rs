//! GitHub issue thread filtering.
//!
//! Issue content is a JSON array of comment objects, each with at least an
//! `author` and a `body` string. Unknown fields are carried through.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verdict::{reason, FilterVerdict};

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub author: String,
    pub body: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IssueConfig {
    /// Regexes matched against comment authors.
    pub bot_patterns: Vec<String>,
    /// Lines whose trimmed text starts with one of these are removed.
    pub autogen_prefixes: Vec<String>,
    pub min_engaged_users: usize,
    pub english_min_stopword_fraction: f64,
    /// Threads with fewer whitespace tokens than this skip the English check.
    pub english_min_tokens: usize,
}

impl Default for IssueConfig {
    fn default() -> Self {
        IssueConfig {
            bot_patterns: vec![r"\[bot\]$".into(), r"-bot$".into()],
            autogen_prefixes: vec!["This issue has been automatically".into()],
            min_engaged_users: 2,
            english_min_stopword_fraction: 0.05,
            english_min_tokens: 20,
        }
    }
}

impl IssueConfig {
    pub fn validate(&self) -> Result<()> {
        for p in &self.bot_patterns {
            Regex::new(p).map_err(|e| Error::Config(format!("bot pattern `{p}`: {e}")))?;
        }
        if !(0.0..=1.0).contains(&self.english_min_stopword_fraction) {
            return Err(Error::Config(
                "english_min_stopword_fraction must be in [0,1]".into(),
            ));
        }
        Ok(())
    }

    fn bot_regexes(&self) -> Result<Vec<Regex>> {
        self.bot_patterns
            .iter()
            .map(|p| Regex::new(p).map_err(|e| Error::Config(format!("bot pattern `{p}`: {e}"))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IssueOutcome {
    pub verdict: FilterVerdict,
    /// Thread content after bot and auto-generated comment removal.
    pub content: String,
}

pub fn parse_thread(content: &str) -> Result<Vec<Comment>> {
    serde_json::from_str(content).map_err(|e| Error::IssueFormat(e.to_string()))
}

/// Fraction of whitespace tokens (lowercased, edge punctuation trimmed) that
/// are English stop words.
pub fn stopword_fraction(text: &str) -> (f64, usize) {
    let words = stopwords();
    let mut total = 0usize;
    let mut hits = 0usize;
    for tok in text.split_whitespace() {
        total += 1;
        let t = tok
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if words.contains(t.as_str()) {
            hits += 1;
        }
    }
    if total == 0 {
        (0.0, 0)
    } else {
        (hits as f64 / total as f64, total)
    }
}

pub fn filter_issue(content: &str, cfg: &IssueConfig) -> Result<IssueOutcome> {
    let comments = parse_thread(content)?;
    let bots = cfg.bot_regexes()?;
    let original_len = comments.len();

    let humans: Vec<Comment> = comments
        .into_iter()
        .filter(|c| !bots.iter().any(|b| b.is_match(&c.author)))
        .collect();
    let engaged: BTreeSet<&str> = humans.iter().map(|c| c.author.as_str()).collect();
    let engaged = engaged.len();

    let mut changed = humans.len() != original_len;
    let mut kept = Vec::with_capacity(humans.len());
    for mut c in humans {
        let is_autogen = |line: &str| {
            let t = line.trim_start();
            cfg.autogen_prefixes
                .iter()
                .any(|p| t.starts_with(p.as_str()))
        };
        if c.body.lines().any(is_autogen) {
            changed = true;
            c.body = c
                .body
                .lines()
                .filter(|l| !is_autogen(l))
                .collect::<Vec<_>>()
                .join("\n");
            if c.body.trim().is_empty() {
                continue;
            }
        }
        kept.push(c);
    }

    let mut verdict = FilterVerdict::keep();
    let text: String = kept
        .iter()
        .map(|c| c.body.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let (fraction, tokens) = stopword_fraction(&text);
    if tokens >= cfg.english_min_tokens && fraction < cfg.english_min_stopword_fraction {
        verdict = verdict.merge(FilterVerdict::drop(reason::NON_ENGLISH));
    }
    if engaged < cfg.min_engaged_users {
        verdict = verdict.merge(FilterVerdict::drop(reason::LOW_ENGAGEMENT));
    }

    let content = if changed {
        serde_json::to_string(&kept).expect("comments serialize")
    } else {
        content.to_string()
    };
    Ok(IssueOutcome { verdict, content })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thread(comments: &[(&str, &str)]) -> String {
        let v: Vec<_> = comments
            .iter()
            .map(|(a, b)| serde_json::json!({"author": a, "body": b}))
            .collect();
        serde_json::to_string(&v).unwrap()
    }

    const ENGLISH: &str = "I think the build is broken on the main branch because of the new \
                           config and we should look into it before the release";

    #[test]
    fn two_humans_in_english_is_kept_unchanged() {
        let c = thread(&[
            ("alice", ENGLISH),
            ("bob", "Yes, I can see it too and will fix it"),
        ]);
        let out = filter_issue(&c, &IssueConfig::default()).unwrap();
        assert!(out.verdict.keep);
        assert_eq!(out.content, c);
    }

    #[test]
    fn bot_comments_do_not_count_as_engagement() {
        let c = thread(&[
            ("alice", ENGLISH),
            ("dependabot[bot]", "Bumps foo from 1.0 to 1.1"),
        ]);
        let out = filter_issue(&c, &IssueConfig::default()).unwrap();
        assert_eq!(out.verdict.reasons, vec!["low_engagement"]);
        let kept = parse_thread(&out.content).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].author, "alice");
    }

    #[test]
    fn dash_bot_suffix_is_a_bot() {
        let c = thread(&[("alice", ENGLISH), ("ci-bot", "ok"), ("bob", "agreed")]);
        let out = filter_issue(&c, &IssueConfig::default()).unwrap();
        assert!(out.verdict.keep);
        assert_eq!(parse_thread(&out.content).unwrap().len(), 2);
    }

    #[test]
    fn cjk_thread_is_not_english() {
        let words = "构建 失败 主分支 配置 文件 发布 之前 需要 修复 测试 用例 运行 环境 依赖 版本 更新 日志 错误 信息 堆栈 问题";
        let c = thread(&[("alice", words), ("bob", words)]);
        let out = filter_issue(&c, &IssueConfig::default()).unwrap();
        assert_eq!(out.verdict.reasons, vec!["non_english"]);
    }

    #[test]
    fn short_threads_skip_the_english_check() {
        let c = thread(&[("alice", "构建 失败"), ("bob", "修复")]);
        assert!(
            filter_issue(&c, &IssueConfig::default())
                .unwrap()
                .verdict
                .keep
        );
    }

    #[test]
    fn autogenerated_lines_are_removed() {
        let stale = "This issue has been automatically marked as stale because it has not had recent activity.";
        let c = thread(&[
            ("alice", ENGLISH),
            ("bob", &format!("{stale}\nStill relevant for me")),
            ("carol", stale),
        ]);
        let out = filter_issue(&c, &IssueConfig::default()).unwrap();
        assert!(out.verdict.keep);
        let kept = parse_thread(&out.content).unwrap();
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[1].body, "Still relevant for me");
    }

    #[test]
    fn unparseable_thread_is_an_error() {
        assert!(matches!(
            filter_issue("plain text issue", &IssueConfig::default()),
            Err(Error::IssueFormat(_))
        ));
        assert!(filter_issue(r#"[{"body":"no author"}]"#, &IssueConfig::default()).is_err());
    }

    #[test]
    fn extra_fields_survive_rewrites() {
        let c = r#"[{"author":"a","body":"x","created_at":"2024"},{"author":"b[bot]","body":"y"}]"#;
        let out = filter_issue(c, &IssueConfig::default()).unwrap();
        assert_eq!(
            out.content,
            r#"[{"author":"a","body":"x","created_at":"2024"}]"#
        );
    }
}

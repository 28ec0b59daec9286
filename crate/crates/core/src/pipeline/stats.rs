use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::corpus_io::{LanguageStats, PipelineManifest};
use crate::error::{Error, Result};

use super::Stage;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub manifests: Vec<PipelineManifest>,
    pub checks: Vec<Check>,
}

fn locate(dir: &Path, stage: Stage) -> Option<PathBuf> {
    [
        PipelineManifest::path_in(dir, stage.name()),
        dir.join(format!("{}.json", stage.name())),
    ]
    .into_iter()
    .find(|p| p.is_file())
}

/// Reads the manifests under `dir` (an output directory or its `manifest/`
/// subdirectory). Stages must form an unbroken prefix of the stage order.
pub fn stats_report(dir: &Path) -> Result<StatsReport> {
    let found: Vec<(Stage, Option<PathBuf>)> =
        Stage::ALL.iter().map(|&s| (s, locate(dir, s))).collect();
    let Some(last) = found.iter().rposition(|(_, p)| p.is_some()) else {
        return Err(Error::MissingManifest(format!(
            "no stage manifests under {}",
            dir.display()
        )));
    };
    let gaps: Vec<&str> = found[..last]
        .iter()
        .filter(|(_, p)| p.is_none())
        .map(|(s, _)| s.name())
        .collect();
    if !gaps.is_empty() {
        return Err(Error::MissingManifest(format!(
            "missing before {}: {}",
            found[last].0,
            gaps.join(", ")
        )));
    }
    let manifests = found[..=last]
        .iter()
        .map(|(_, p)| PipelineManifest::read(p.as_deref().expect("present")))
        .collect::<Result<Vec<_>>>()?;
    let checks = checks(&manifests);
    Ok(StatsReport { manifests, checks })
}

fn checks(ms: &[PipelineManifest]) -> Vec<Check> {
    let mut out = Vec::new();
    for m in ms {
        let r = m.check();
        out.push(Check {
            name: format!("counts {}", m.stage_name),
            pass: r.is_ok(),
            detail: r.err().unwrap_or_else(|| {
                format!("{} = {} + {}", m.input_count, m.kept_count, m.dropped_count)
            }),
        });
    }
    // Document stages feed each other directly; the mixture reads its own sources.
    let doc_stages: Vec<&PipelineManifest> = ms.iter().filter(|m| m.stage_name != "mix").collect();
    for w in doc_stages.windows(2) {
        let ok = w[0].kept_count == w[1].input_count;
        out.push(Check {
            name: format!("chain {} -> {}", w[0].stage_name, w[1].stage_name),
            pass: ok,
            detail: format!("kept {} / input {}", w[0].kept_count, w[1].input_count),
        });
    }
    if let (Some(first), Some(last)) = (doc_stages.first(), doc_stages.last()) {
        let dropped: u64 = doc_stages.iter().map(|m| m.dropped_count).sum();
        let ok = first.input_count == last.kept_count + dropped;
        out.push(Check {
            name: "every drop counted once".into(),
            pass: ok,
            detail: format!(
                "{} in = {} out + {} dropped",
                first.input_count, last.kept_count, dropped
            ),
        });
    }
    out
}

impl StatsReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn last_doc_stage(&self) -> Option<&PipelineManifest> {
        self.manifests
            .iter()
            .filter(|m| m.stage_name != "mix" && !m.skipped)
            .next_back()
    }

    fn cluster_sizes(&self) -> BTreeMap<u64, u64> {
        self.manifests
            .iter()
            .find(|m| m.stage_name == Stage::FuzzyDedup.name())
            .map(|m| m.cluster_sizes.clone())
            .unwrap_or_default()
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<18} {:>9} {:>9} {:>9}  reasons",
            "stage", "input", "kept", "dropped"
        );
        for m in &self.manifests {
            if m.skipped {
                let _ = writeln!(
                    s,
                    "{:<18} {:>9} {:>9} {:>9}  (skipped)",
                    m.stage_name, m.input_count, m.kept_count, "-"
                );
                continue;
            }
            let reasons: Vec<String> = m
                .drop_reasons
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let _ = writeln!(
                s,
                "{:<18} {:>9} {:>9} {:>9}  {}",
                m.stage_name,
                m.input_count,
                m.kept_count,
                m.dropped_count,
                reasons.join(" ")
            );
        }
        let empty = BTreeMap::new();
        let first = self.manifests.first().map_or(&empty, |m| &m.languages);
        let last = self.last_doc_stage().map_or(&empty, |m| &m.languages);
        let _ = writeln!(
            s,
            "\n{:<24} {:>8} {:>10} {:>8} {:>10}",
            "language", "in_docs", "in_tokens", "out_docs", "out_tokens"
        );
        let mut keys: Vec<&String> = first.keys().chain(last.keys()).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let a = first.get(k).cloned().unwrap_or(LanguageStats::default());
            let b = last.get(k).cloned().unwrap_or(LanguageStats::default());
            let _ = writeln!(
                s,
                "{:<24} {:>8} {:>10} {:>8} {:>10}",
                k, a.docs, a.tokens, b.docs, b.tokens
            );
        }
        let clusters = self.cluster_sizes();
        if !clusters.is_empty() {
            let _ = writeln!(s, "\ncluster size  clusters");
            for (size, n) in clusters {
                let _ = writeln!(s, "{size:>12}  {n}");
            }
        }
        s.push('\n');
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {} ({})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        s
    }

    pub fn json(&self) -> serde_json::Value {
        let funnel: Vec<_> = self
            .manifests
            .iter()
            .map(|m| {
                json!({
                    "stage": m.stage_name,
                    "skipped": m.skipped,
                    "input": m.input_count,
                    "kept": m.kept_count,
                    "dropped": m.dropped_count,
                    "reasons": m.drop_reasons,
                })
            })
            .collect();
        json!({
            "funnel": funnel,
            "languages_in": self.manifests.first().map(|m| &m.languages),
            "languages_out": self.last_doc_stage().map(|m| &m.languages),
            "cluster_sizes": self.cluster_sizes(),
            "checks": self.checks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verdict::FilterVerdict;

    #[test]
    fn single_stage_gives_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = PipelineManifest::new("ingest", String::new(), 0);
        m.record_kept();
        m.add_language("Python", 10);
        m.write(dir.path()).unwrap();
        let r = stats_report(dir.path()).unwrap();
        assert_eq!(r.manifests.len(), 1);
        assert!(r.all_pass());
        let text = r.text();
        assert!(text.contains("ingest"));
        assert!(text.contains("PASS counts ingest"));
        assert_eq!(r.json()["funnel"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn gaps_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        PipelineManifest::new("ingest", String::new(), 0)
            .write(dir.path())
            .unwrap();
        PipelineManifest::new("quality", String::new(), 0)
            .write(dir.path())
            .unwrap();
        match stats_report(dir.path()) {
            Err(Error::MissingManifest(msg)) => assert!(msg.contains("license_language")),
            other => panic!("{other:?}"),
        }
        assert!(stats_report(&dir.path().join("nothing")).is_err());
    }

    #[test]
    fn broken_identities_fail() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = PipelineManifest::new("ingest", String::new(), 0);
        m.record(&FilterVerdict::drop("low_alpha"));
        m.dropped_count += 1;
        m.write(dir.path()).unwrap();
        let r = stats_report(dir.path()).unwrap();
        assert!(!r.all_pass());
        assert!(r.text().contains("FAIL counts ingest"));
    }
}

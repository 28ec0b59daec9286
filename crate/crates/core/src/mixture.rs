//! Token-budgeted interleaving of component streams.
//!
//! The scheduler is deterministic: at every step it draws from the active
//! component whose emitted tokens lag furthest behind its weighted share of
//! everything emitted so far.

use std::collections::BTreeSet;
use std::io::Write;
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{read_all, PipelineManifest};
use crate::error::{Error, Result};
use crate::fim::FimRecord;

/// Component source that refers to the output of the preceding pipeline stage.
pub const PIPELINE_SOURCE: &str = "@pipeline";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub name: String,
    pub weight: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
    pub token_budget: u64,
    #[serde(default)]
    pub seed: u64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Config("mixture needs at least one component".into()));
        }
        if self.token_budget == 0 {
            return Err(Error::Config("token_budget must be positive".into()));
        }
        let mut names = BTreeSet::new();
        for c in &self.components {
            if !names.insert(c.name.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate component name `{}`",
                    c.name
                )));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::Config(format!(
                    "component `{}` has an invalid weight",
                    c.name
                )));
            }
        }
        let sum: f64 = self.components.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "mixture weights sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterMode {
    #[default]
    ByteEstimate,
    Whitespace,
    Plugin,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenCounter {
    pub mode: CounterMode,
    /// External tokenizer: reads text on stdin, prints a decimal count.
    pub plugin_command: Option<String>,
}

impl TokenCounter {
    pub fn validate(&self) -> Result<()> {
        if self.mode == CounterMode::Plugin
            && self
                .plugin_command
                .as_deref()
                .map_or(true, |c| c.trim().is_empty())
        {
            return Err(Error::Config(
                "plugin token counter needs plugin_command".into(),
            ));
        }
        Ok(())
    }
}

fn run_plugin(command: &str, content: &str) -> Result<u64> {
    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| Error::TokenizerUnavailable("empty command".into()))?;
    let unavailable = |e: std::io::Error| Error::TokenizerUnavailable(format!("{program}: {e}"));
    let mut child = Command::new(program)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(unavailable)?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = content.to_owned();
    let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
    let out = child.wait_with_output().map_err(unavailable)?;
    // A tokenizer may exit before draining stdin; its answer still counts.
    let _ = writer.join();
    if !out.status.success() {
        return Err(Error::TokenizerUnavailable(format!(
            "{program} exited with {}",
            out.status
        )));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    text.trim()
        .parse()
        .map_err(|_| Error::TokenizerUnavailable(format!("{program} printed `{}`", text.trim())))
}

pub fn count_tokens(content: &str, counter: &TokenCounter) -> Result<u64> {
    if content.is_empty() {
        return Ok(0);
    }
    match counter.mode {
        CounterMode::ByteEstimate => Ok((content.len() as u64).div_ceil(4)),
        CounterMode::Whitespace => Ok(content.split_whitespace().count() as u64),
        CounterMode::Plugin => run_plugin(counter.plugin_command.as_deref().unwrap_or(""), content),
    }
}

/// Per-component token targets by largest remainder; they sum to the budget.
pub fn plan_phase(spec: &MixtureSpec) -> Vec<(String, u64)> {
    let budget = spec.token_budget;
    let exact: Vec<f64> = spec
        .components
        .iter()
        .map(|c| c.weight * budget as f64)
        .collect();
    let mut targets: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let assigned: u64 = targets.iter().sum();
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    if assigned <= budget {
        for &i in order.iter().cycle().take((budget - assigned) as usize) {
            targets[i] += 1;
        }
    } else {
        // Only reachable through float rounding in floor().
        for &i in order
            .iter()
            .rev()
            .cycle()
            .take((assigned - budget) as usize)
        {
            targets[i] = targets[i].saturating_sub(1);
        }
    }
    spec.components
        .iter()
        .zip(targets)
        .map(|(c, t)| (c.name.clone(), t))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub name: String,
    pub weight: f64,
    pub target_tokens: u64,
    pub emitted_tokens: u64,
    pub emitted_docs: u64,
    pub source_docs: u64,
    pub distinct_docs: u64,
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixOutcome {
    pub records: Vec<FimRecord>,
    pub components: Vec<ComponentReport>,
    pub total_tokens: u64,
    pub max_doc_tokens: u64,
    pub warnings: Vec<String>,
}

impl MixOutcome {
    pub fn share(&self, i: usize) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.components[i].emitted_tokens as f64 / self.total_tokens as f64
        }
    }

    /// Source documents never emitted count as dropped with reason
    /// `not_sampled`; repeated emissions are reported in counters.
    pub fn manifest(&self, config_digest: String, seed: u64) -> PipelineManifest {
        let mut m = PipelineManifest::new("mix", config_digest, seed);
        for c in &self.components {
            m.input_count += c.source_docs;
            m.kept_count += c.distinct_docs;
            let unused = c.source_docs - c.distinct_docs;
            m.dropped_count += unused;
            if unused > 0 {
                *m.drop_reasons.entry("not_sampled".into()).or_default() += unused;
            }
            m.bump(&format!("target_tokens:{}", c.name), c.target_tokens);
            m.bump(&format!("emitted_tokens:{}", c.name), c.emitted_tokens);
            m.bump(&format!("emitted_docs:{}", c.name), c.emitted_docs);
        }
        m.bump("emitted_records", self.records.len() as u64);
        m.bump("total_tokens", self.total_tokens);
        m.bump("max_doc_tokens", self.max_doc_tokens);
        m.warnings = self.warnings.clone();
        m
    }
}

struct Cursor {
    next: usize,
    passes: u64,
    stopped: bool,
    exhausted: bool,
}

/// Interleaves `sources` (one per component, in spec order).
///
/// Token counts are computed in parallel; the schedule itself is sequential
/// and uses no randomness. A component stops once its next document would
/// overshoot its target. Once every component has stopped, remaining budget
/// is filled greedily in the same deficit order with documents that fit.
/// Without `repeat`, the first component to run dry ends the stream with a
/// `component_exhausted` warning; with it, sources cycle.
pub fn sample_stream(
    spec: &MixtureSpec,
    sources: Vec<Vec<FimRecord>>,
    counter: &TokenCounter,
    repeat: bool,
) -> Result<MixOutcome> {
    spec.validate()?;
    counter.validate()?;
    if sources.len() != spec.components.len() {
        return Err(Error::Config(format!(
            "{} sources for {} components",
            sources.len(),
            spec.components.len()
        )));
    }
    let counts: Vec<Vec<u64>> = sources
        .par_iter()
        .map(|src| {
            src.par_iter()
                .map(|r| count_tokens(r.training_text(), counter))
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<_>>()?;
    let targets = plan_phase(spec);
    let n = sources.len();
    let weights: Vec<f64> = spec.components.iter().map(|c| c.weight).collect();
    let mut cursors: Vec<Cursor> = (0..n)
        .map(|i| Cursor {
            next: 0,
            passes: 0,
            stopped: weights[i] == 0.0,
            exhausted: false,
        })
        .collect();
    let mut emitted = vec![0u64; n];
    let mut emitted_docs = vec![0u64; n];
    let mut used: Vec<Vec<bool>> = sources.iter().map(|s| vec![false; s.len()]).collect();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut total = 0u64;
    let mut max_doc = 0u64;
    let mut warnings = Vec::new();

    // Index of the next document, or None when the source is dry.
    let peek = |c: &mut Cursor, i: usize| -> Option<usize> {
        let len = sources[i].len();
        if c.next >= len {
            let productive = counts[i].iter().any(|&t| t > 0);
            if !repeat || len == 0 || !productive {
                return None;
            }
            c.next = 0;
            c.passes += 1;
        }
        Some(c.next)
    };
    let pick =
        |cursors: &[Cursor], emitted: &[u64], total: u64, eligible: &dyn Fn(usize) -> bool| {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..n {
                if cursors[i].exhausted || !eligible(i) {
                    continue;
                }
                let deficit = weights[i] * total as f64 - emitted[i] as f64;
                if best.is_none_or(|(_, d)| deficit > d) {
                    best = Some((i, deficit));
                }
            }
            best.map(|(i, _)| i)
        };

    let mut phase_fill = false;
    loop {
        let chosen = if phase_fill {
            pick(&cursors, &emitted, total, &|i| weights[i] > 0.0)
        } else {
            pick(&cursors, &emitted, total, &|i| !cursors[i].stopped)
        };
        let Some(i) = chosen else {
            if phase_fill {
                break;
            }
            phase_fill = true;
            continue;
        };
        let Some(j) = peek(&mut cursors[i], i) else {
            cursors[i].exhausted = true;
            if !phase_fill {
                warnings.push(format!("component_exhausted:{}", spec.components[i].name));
                break;
            }
            continue;
        };
        let t = counts[i][j];
        let fits = if phase_fill {
            total + t <= spec.token_budget
        } else {
            emitted[i] + t <= targets[i].1 && total + t <= spec.token_budget
        };
        if !fits {
            if phase_fill {
                // Nothing later in this source is tried: order is preserved.
                cursors[i].exhausted = true;
            } else {
                cursors[i].stopped = true;
            }
            continue;
        }
        cursors[i].next += 1;
        emitted[i] += t;
        emitted_docs[i] += 1;
        total += t;
        max_doc = max_doc.max(t);
        used[i][j] = true;
        order.push((i, j));
    }

    let records = order
        .iter()
        .map(|&(i, j)| {
            let mut r = sources[i][j].clone();
            r.doc
                .annotations
                .insert("mix_component".into(), spec.components[i].name.clone());
            r
        })
        .collect();
    // Largest document in any source bounds the share error.
    let max_source_doc = counts.iter().flatten().copied().max().unwrap_or(0);
    let components = spec
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| ComponentReport {
            name: c.name.clone(),
            weight: c.weight,
            target_tokens: targets[i].1,
            emitted_tokens: emitted[i],
            emitted_docs: emitted_docs[i],
            source_docs: sources[i].len() as u64,
            distinct_docs: used[i].iter().filter(|&&u| u).count() as u64,
            exhausted: cursors[i].exhausted && !cursors[i].stopped,
        })
        .collect();
    Ok(MixOutcome {
        records,
        components,
        total_tokens: total,
        max_doc_tokens: max_doc.max(max_source_doc),
        warnings,
    })
}

/// Reads every component source except [`PIPELINE_SOURCE`], which takes
/// `pipeline_output`.
pub fn load_sources(
    spec: &MixtureSpec,
    mut pipeline_output: Option<Vec<FimRecord>>,
) -> Result<Vec<Vec<FimRecord>>> {
    spec.components
        .iter()
        .map(|c| {
            if c.source == PIPELINE_SOURCE {
                pipeline_output.take().ok_or_else(|| {
                    Error::Config(format!(
                        "component `{}`: {PIPELINE_SOURCE} unavailable here",
                        c.name
                    ))
                })
            } else {
                read_all::<FimRecord>(&c.source)
            }
        })
        .collect()
}

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus_io::Document;
use crate::dedup::exact_dedup;
use crate::error::{Error, Result};
use crate::quality::{apply_quality, IssueConfig, QualityConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub docs: usize,
    pub bytes: usize,
    pub threads: usize,
    pub seconds: f64,
    pub mb_per_s: f64,
    pub kept: usize,
}

const WORDS: &[&str] = &[
    "self", "return", "value", "index", "buffer", "config", "result", "items", "count", "name",
    "parse", "render", "state", "event", "handler", "request", "offset", "length", "token",
];

/// Roughly `target_bytes` of code-like documents across a few languages,
/// one in ten an exact copy of an earlier one.
pub fn synthetic_corpus(target_bytes: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exts = ["py", "rs", "js", "go", "java", "json", "html"];
    let mut docs: Vec<Document> = Vec::new();
    let mut total = 0;
    while total < target_bytes {
        let i = docs.len();
        let doc = if i > 10 && i % 10 == 0 {
            let src = &docs[rng.random_range(0..i)];
            Document::new(format!("b{i}"), src.path.clone(), src.content.clone())
        } else {
            let lines = rng.random_range(20..120);
            let mut content = String::new();
            for _ in 0..lines {
                let indent = rng.random_range(0..3) * 4;
                content.extend(std::iter::repeat_n(' ', indent));
                for w in 0..rng.random_range(2..9) {
                    if w > 0 {
                        content.push(' ');
                    }
                    content.push_str(WORDS[rng.random_range(0..WORDS.len())]);
                    if rng.random_bool(0.2) {
                        content.push_str(&rng.random_range(0..1000).to_string());
                    }
                }
                content.push_str(if rng.random_bool(0.3) { "()\n" } else { "\n" });
            }
            let ext = exts[i % exts.len()];
            Document::new(format!("b{i}"), format!("src/f{i}.{ext}"), content)
        };
        total += doc.content.len();
        docs.push(doc);
    }
    docs
}

/// Times the quality rules plus exact dedup over `docs` on `threads` threads.
pub fn bench_quality_exact(docs: Vec<Document>, threads: usize) -> Result<BenchReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let n = docs.len();
    let bytes: usize = docs.iter().map(|d| d.content.len()).sum();
    let (qcfg, icfg) = (QualityConfig::default(), IssueConfig::default());
    let start = Instant::now();
    let kept = pool.install(|| -> Result<usize> {
        let verdicts: Vec<bool> = docs
            .par_iter()
            .map(|d| apply_quality(d, &qcfg, &icfg).map(|o| o.verdict.keep))
            .collect::<Result<_>>()?;
        let survivors: Vec<Document> = docs
            .into_iter()
            .zip(verdicts)
            .filter_map(|(d, k)| k.then_some(d))
            .collect();
        Ok(exact_dedup(survivors).0.len())
    })?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(BenchReport {
        docs: n,
        bytes,
        threads: threads.max(1),
        seconds,
        mb_per_s: bytes as f64 / 1e6 / seconds.max(1e-9),
        kept,
    })
}

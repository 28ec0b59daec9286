//! Browser bindings for three curation primitives. Each export takes plain
//! values and returns a JSON string; the `*_json` functions are the same
//! operations without the wasm boundary.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use curator_core::dedup::{
    candidate_probability, implied_threshold, jaccard, shingles, DedupConfig, MinHasher,
};
use curator_core::fim::{build_sample, FimConfig, SpmLayout};
use curator_core::safety::{detect_pii, redact_pii, PiiTokens};
use curator_core::seed::doc_rng;
use curator_core::{Document, SourceKind};

#[derive(Serialize)]
struct Failure {
    error: String,
}

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v),
        Err(error) => serde_json::to_string(&Failure { error }),
    }
    .expect("plain data serializes")
}

fn kind(name: &str) -> Result<SourceKind, String> {
    match name {
        "code" => Ok(SourceKind::Code),
        "issue" => Ok(SourceKind::Issue),
        "natural_language" => Ok(SourceKind::NaturalLanguage),
        other => Err(format!("unknown source kind `{other}`")),
    }
}

pub fn redact_json(text: &str, source_kind: &str, seed: u64) -> String {
    to_json((|| {
        let spans = detect_pii(text, kind(source_kind)?);
        let mut rng = doc_rng(seed, "pii", "demo");
        let redacted = redact_pii(text, &spans, &PiiTokens::default(), &mut rng).map_err(|e| e.to_string())?;
        Ok(json!({ "spans": spans, "redacted": redacted }))
    })())
}

pub fn fim_json(text: &str, fim_rate: f64, psm_fraction: f64, reordered: bool, seed: u64) -> String {
    to_json((|| {
        let cfg = FimConfig {
            alpha: 1.0 - fim_rate,
            psm_fraction,
            spm_layout: if reordered { SpmLayout::Reordered } else { SpmLayout::PrefixSuffixHeader },
            ..FimConfig::default()
        };
        cfg.validate().map_err(|e| e.to_string())?;
        let built = build_sample(&Document::new("demo", "demo.txt", text), &cfg, seed);
        Ok(json!({
            "mode": built.sample.mode,
            "prefix": built.sample.prefix,
            "middle": built.sample.middle,
            "suffix": built.sample.suffix,
            "serialized": built.sample.serialized,
            "fallback": built.fallback.map(|f| f.code()),
        }))
    })())
}

pub fn similarity_json(a: &str, b: &str) -> String {
    let cfg = DedupConfig::default();
    let (sa, sb) = (shingles("a", a, cfg.shingle_k), shingles("b", b, cfg.shingle_k));
    let hasher = MinHasher::new(cfg.num_permutations, cfg.perm_seed);
    let exact = jaccard(&sa, &sb);
    let estimate = hasher.signature(&sa).match_fraction(&hasher.signature(&sb));
    let curve: Vec<[f64; 2]> = (0..=50)
        .map(|i| {
            let s = i as f64 / 50.0;
            [s, candidate_probability(s, cfg.bands, cfg.rows)]
        })
        .collect();
    to_json(Ok(json!({
        "shingles": [sa.len(), sb.len()],
        "exact": exact,
        "estimate": estimate,
        "candidate_probability": candidate_probability(exact, cfg.bands, cfg.rows),
        "duplicate": exact >= cfg.jaccard_threshold,
        "threshold": cfg.jaccard_threshold,
        "implied_threshold": implied_threshold(cfg.bands, cfg.rows),
        "curve": curve,
    })))
}

/// Detects and replaces PII; IPs become documentation addresses.
#[wasm_bindgen]
pub fn redact(text: &str, source_kind: &str, seed: u32) -> String {
    redact_json(text, source_kind, seed as u64)
}

/// One FIM sample; `fim_rate` is the probability of a FIM transform.
#[wasm_bindgen]
pub fn fim(text: &str, fim_rate: f64, psm_fraction: f64, reordered: bool, seed: u32) -> String {
    fim_json(text, fim_rate, psm_fraction, reordered, seed as u64)
}

/// Exact and MinHash-estimated shingle Jaccard plus the LSH S-curve.
#[wasm_bindgen]
pub fn similarity(a: &str, b: &str) -> String {
    similarity_json(a, b)
}

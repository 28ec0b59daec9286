use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;
use proptest::sample::subsequence;

use curator_core::corpus_io::{assign_language, read_all, write_records};
use curator_core::dedup::{content_digest, exact_dedup, fuzzy_dedup, DedupConfig};
use curator_core::fim::{build_sample, parse_fim_in, FimConfig, FimMode, SpmLayout};
use curator_core::mixture::{
    count_tokens, plan_phase, sample_stream, CounterMode, MixtureComponent, MixtureSpec, TokenCounter,
};
use curator_core::pipeline::{run_on, PipelineConfig, Stage, StageToggles, Stream};
use curator_core::quality::{
    apply_quality, code_rules, rule_html_visible, rule_min_alpha, rule_structured_size, rule_xml_header,
    IssueConfig, QualityConfig,
};
use curator_core::safety::{detect_pii, hap_count, redact_pii, HapConfig, MatchMode, PiiKind, PiiTokens};
use curator_core::seed::doc_rng;
use curator_core::{Document, FilterVerdict, SourceKind};

const PATHS: &[&str] = &["a.py", "b.rs", "c.json", "d.yaml", "e.html", "f.xml", "g.xslt", "Makefile", "h.zzz"];

fn content() -> impl Strategy<Value = String> {
    prop_oneof![
        ".{0,200}",
        "[a-z0-9 {}();=\n<>\"?]{0,300}",
        "(<\\?xml version=\"1.0\"\\?>)?[a-z <>/]{0,120}",
    ]
}

fn documents(max: usize) -> impl Strategy<Value = Vec<Document>> {
    prop::collection::vec(
        (
            prop::sample::select(PATHS),
            content(),
            prop::option::of(prop::sample::select(&["MIT", "GPL-3.0", "Apache-2.0"][..])),
            prop::collection::btree_map("[a-z]{1,4}", ".{0,8}", 0..3),
        ),
        0..max,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (path, content, license, annotations))| {
                let mut d = Document::new(format!("d{i}"), path, content).with_repo("r");
                let lang = assign_language(path);
                if !lang.is_unknown() {
                    d = d.with_language(lang);
                }
                d.license = license.map(String::from);
                d.annotations = annotations;
                d
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn records_round_trip_byte_exactly(docs in documents(20)) {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        write_records(&docs, &a).unwrap();
        let back: Vec<Document> = read_all(&a).unwrap();
        prop_assert_eq!(&back, &docs);
        write_records(&back, &b).unwrap();
        prop_assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn assign_language_is_pure(path in "[A-Za-z_/]{0,12}(\\.[a-z]{1,4}){0,2}") {
        prop_assert_eq!(assign_language(&path), assign_language(&path));
    }

    #[test]
    fn quality_is_union_of_rules_in_any_order(
        docs in documents(8),
        order in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let cfg = QualityConfig::default();
        let all = [rule_min_alpha, rule_xml_header, rule_html_visible, rule_structured_size];
        for d in &docs {
            let lang = d.language_or_unknown();
            let applicable = code_rules(lang);
            let got = apply_quality(d, &cfg, &IssueConfig::default()).unwrap().verdict;
            let mut expected: Vec<String> = applicable.iter().flat_map(|r| r(d, &cfg).reasons).collect();
            let mut shuffled: Vec<String> = order
                .iter()
                .map(|&i| all[i])
                .filter(|r| applicable.iter().any(|a| std::ptr::fn_addr_eq(*a, *r)))
                .flat_map(|r| r(d, &cfg).reasons)
                .collect();
            let mut reasons = got.reasons.clone();
            reasons.sort();
            expected.sort();
            expected.dedup();
            shuffled.sort();
            shuffled.dedup();
            prop_assert_eq!(&reasons, &expected);
            prop_assert_eq!(&reasons, &shuffled);
            prop_assert_eq!(got.keep, reasons.is_empty());
        }
    }

    #[test]
    fn every_manifest_balances_and_drops_count_once(docs in documents(30), seed in any::<u32>()) {
        let cfg = PipelineConfig { seed: seed as u64, ..PipelineConfig::default() };
        let n = docs.len() as u64;
        let out = run_on(&cfg, docs, None).unwrap();
        for m in &out.manifests {
            prop_assert!(m.check().is_ok(), "{:?}", m.check());
        }
        let dropped: u64 = out.manifests.iter().filter(|m| m.stage_name != "mix").map(|m| m.dropped_count).sum();
        prop_assert_eq!(dropped + out.output.len() as u64, n);
    }

    #[test]
    fn disabling_a_stage_is_identity(docs in documents(20), cut in 1usize..8) {
        let stage = Stage::ALL[cut];
        let (before, after) = (&Stage::ALL[..cut], &Stage::ALL[cut + 1..]);
        let with = |stages: &[Stage]| PipelineConfig { stages: StageToggles::only(stages), ..PipelineConfig::default() };
        let mut skipping = StageToggles::default();
        skipping.set(stage, false);
        let whole = run_on(&PipelineConfig { stages: skipping, ..PipelineConfig::default() }, docs.clone(), None).unwrap();
        prop_assert!(whole.manifest(stage).skipped);
        let Stream::Docs(mid) = run_on(&with(before), docs, None).unwrap().output else {
            panic!("stages before FIM emit documents");
        };
        prop_assert_eq!(run_on(&with(after), mid, None).unwrap().output, whole.output);
    }

    #[test]
    fn exact_dedup_leaves_distinct_digests(docs in documents(30), copies in subsequence((0..30usize).collect::<Vec<_>>(), 0..10)) {
        let mut docs = docs;
        for (k, i) in copies.into_iter().enumerate() {
            if let Some(src) = docs.get(i % docs.len().max(1)).cloned() {
                docs.push(Document { id: format!("copy{k}"), ..src });
            }
        }
        let (kept, _) = exact_dedup(docs);
        let digests: HashSet<String> = kept.iter().map(|d| content_digest(&d.content)).collect();
        prop_assert_eq!(digests.len(), kept.len());
    }

    #[test]
    fn hap_count_ignores_line_order(
        lines in prop::collection::vec("(darn|heck|Darn|x|y|darned| |heckle){0,6}", 0..12)
            .prop_shuffle()
            .prop_flat_map(|l| (Just(l.clone()), Just(l).prop_shuffle())),
        whole in any::<bool>(),
    ) {
        let cfg = HapConfig {
            dictionary: ["darn", "heck"].iter().map(|s| s.to_string()).collect(),
            threshold: 2,
            match_mode: if whole { MatchMode::WholeToken } else { MatchMode::Substring },
        };
        let (a, b) = lines;
        prop_assert_eq!(hap_count(&a.join("\n"), &cfg).unwrap(), hap_count(&b.join("\n"), &cfg).unwrap());
    }

    #[test]
    fn pii_spans_are_sorted_disjoint_and_redaction_idempotent(
        parts in prop::collection::vec(prop_oneof![
            "[a-z]{1,8}\\.[a-z]{1,5}@example\\.(com|org)",
            "AKIA[A-Z0-9]{16}",
            "password = \"[a-zA-Z0-9!]{4,12}\"",
            "[a-z ]{0,10}",
            "\n",
        ], 0..12),
        seed in any::<u64>(),
    ) {
        let text = parts.join(" ");
        let spans = detect_pii(&text, SourceKind::Code);
        for w in spans.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
        }
        let chars = text.chars().count();
        prop_assert!(spans.iter().all(|s| s.start < s.end && s.end <= chars));

        let tokens = PiiTokens::default();
        let redact = |s: &str| redact_pii(s, &detect_pii(s, SourceKind::Code), &tokens, &mut doc_rng(seed, "pii", "x")).unwrap();
        let once = redact(&text);
        prop_assert_eq!(redact(&once), once.clone());
        let leaked = detect_pii(&once, SourceKind::Code)
            .into_iter()
            .filter(|s| matches!(s.kind, PiiKind::Email | PiiKind::Key | PiiKind::Password))
            .count();
        prop_assert_eq!(leaked, 0);
    }

    #[test]
    fn fim_samples_rejoin_and_ignore_stream_order(
        texts in prop::collection::vec(".{0,120}", 1..20),
        seed in any::<u64>(),
        layout in prop_oneof![Just(SpmLayout::PrefixSuffixHeader), Just(SpmLayout::Reordered)],
    ) {
        let cfg = FimConfig { spm_layout: layout, ..FimConfig::default() };
        let docs: Vec<Document> = texts.iter().enumerate().map(|(i, t)| Document::new(format!("f{i}"), "f.py", t.as_str())).collect();
        let forward: Vec<_> = docs.iter().map(|d| build_sample(d, &cfg, seed).sample).collect();
        let backward: Vec<_> = docs.iter().rev().map(|d| build_sample(d, &cfg, seed).sample).collect();
        prop_assert!(forward.iter().eq(backward.iter().rev()));
        for (d, s) in docs.iter().zip(&forward) {
            prop_assert_eq!(format!("{}{}{}", s.prefix, s.middle, s.suffix), d.content.clone());
            if s.mode == FimMode::Clm {
                prop_assert_eq!(&s.serialized, &d.content);
                continue;
            }
            for tok in [&cfg.tokens.prefix, &cfg.tokens.suffix, &cfg.tokens.middle] {
                prop_assert_eq!(s.serialized.matches(tok.as_str()).count(), 1);
            }
            let p = parse_fim_in(&s.serialized, &cfg.tokens, layout).unwrap();
            prop_assert_eq!(format!("{}{}{}", p.prefix, p.middle, p.suffix), d.content.clone());
            if layout == SpmLayout::Reordered {
                prop_assert_eq!((p.mode, p.prefix, p.middle, p.suffix), (s.mode, s.prefix.clone(), s.middle.clone(), s.suffix.clone()));
            }
        }
    }

    #[test]
    fn plan_targets_sum_to_budget(raw in prop::collection::vec(0u32..1000, 1..8), budget in 0u64..10_000_000) {
        let total: u32 = raw.iter().sum();
        prop_assume!(total > 0);
        let spec = MixtureSpec {
            components: raw
                .iter()
                .enumerate()
                .map(|(i, &w)| MixtureComponent { name: format!("c{i}"), weight: w as f64 / total as f64, source: String::new() })
                .collect(),
            token_budget: budget,
            seed: 0,
        };
        prop_assert_eq!(plan_phase(&spec).iter().map(|(_, t)| t).sum::<u64>(), budget);
    }

    #[test]
    fn mixture_respects_budget_and_share_bounds(
        sizes in prop::collection::vec(prop::collection::vec(4usize..400, 50..120), 2..4),
        budget in 500u64..5000,
    ) {
        let k = sizes.len();
        let spec = MixtureSpec {
            components: (0..k)
                .map(|i| MixtureComponent { name: format!("c{i}"), weight: 1.0 / k as f64, source: String::new() })
                .collect(),
            token_budget: budget,
            seed: 0,
        };
        let sources = sizes
            .iter()
            .enumerate()
            .map(|(c, docs)| {
                docs.iter()
                    .enumerate()
                    .map(|(i, &n)| curator_core::fim::FimRecord::plain(Document::new(format!("c{c}d{i}"), "t.txt", "x".repeat(n))))
                    .collect()
            })
            .collect();
        let out = sample_stream(&spec, sources, &TokenCounter::default(), true).unwrap();
        prop_assert!(out.total_tokens <= budget);
        prop_assert!(out.total_tokens + out.max_doc_tokens >= budget);
        let bound = out.max_doc_tokens as f64 / budget as f64 + 1e-12;
        for i in 0..k {
            prop_assert!((out.share(i) - 1.0 / k as f64).abs() <= bound, "share {} bound {}", out.share(i), bound);
        }
    }

    #[test]
    fn token_counts_are_monotone_under_concatenation(a in ".{0,80}", b in ".{0,80}", ws in any::<bool>()) {
        let counter = TokenCounter { mode: if ws { CounterMode::Whitespace } else { CounterMode::ByteEstimate }, plugin_command: None };
        let joined = format!("{a}{b}");
        let c = |s: &str| count_tokens(s, &counter).unwrap();
        prop_assert!(c(&joined) >= c(&a).max(c(&b)));
        prop_assert_eq!(c(""), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fuzzy_dedup_is_idempotent(
        base in prop::collection::vec(prop::collection::vec("[a-e]{1,2}", 20..60), 2..6),
        edits in prop::collection::vec((0usize..6, 0usize..60), 0..12),
    ) {
        let mut docs: Vec<Document> = base.iter().enumerate().map(|(i, w)| Document::new(format!("b{i}"), "f.py", w.join(" "))).collect();
        for (k, (src, at)) in edits.into_iter().enumerate() {
            let mut words = base[src % base.len()].clone();
            let at = at % words.len();
            words[at] = "zz".into();
            docs.push(Document::new(format!("e{k}"), "f.py", words.join(" ")));
        }
        let cfg = DedupConfig::default();
        let first = fuzzy_dedup(docs, &cfg).unwrap();
        let ids: BTreeMap<String, ()> = first.clusters.iter().map(|c| (c.representative_id.clone(), ())).collect();
        prop_assert!(first.clusters.iter().all(|c| !c.duplicate_ids.contains(&c.representative_id)));
        prop_assert_eq!(ids.len(), first.clusters.len());
        let second = fuzzy_dedup(first.kept.clone(), &cfg).unwrap();
        prop_assert_eq!(second.dropped(), 0);
    }
}

#[test]
fn merge_is_order_insensitive_on_reason_sets() {
    let a = FilterVerdict::drop("x").merge(FilterVerdict::drop("y"));
    let b = FilterVerdict::drop("y").merge(FilterVerdict::drop("x"));
    let set = |v: &FilterVerdict| v.reasons.iter().cloned().collect::<HashSet<_>>();
    assert_eq!(set(&a), set(&b));
}

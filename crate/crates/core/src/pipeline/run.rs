use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus_io::{
    assign_language, config_digest, filter_language, filter_license, read_all, write_records,
    Document, PipelineManifest, SourceKind,
};
use crate::dedup::{exact_dedup, fuzzy_dedup, DedupCluster};
use crate::error::{Error, Result};
use crate::fim::{build_sample, FimRecord};
use crate::mixture::{
    count_tokens, load_sources, sample_stream, MixOutcome, MixtureSpec, TokenCounter,
};
use crate::quality::apply_quality;
use crate::safety::{
    malware_scan_hook, redact_pii, HapMatcher, PiiDetector, RuleDetector, ScanOutcome,
};
use crate::seed::doc_rng;
use crate::verdict::{reason, FilterVerdict};

use super::{PipelineConfig, Stage};

/// Written to the output directory when a run aborts.
pub const PARTIAL_MARKER: &str = "PARTIAL";

/// Records flowing between stages: plain documents until FIM, samples after.
#[derive(Debug, Clone, PartialEq)]
pub enum Stream {
    Docs(Vec<Document>),
    Samples(Vec<FimRecord>),
}

impl Stream {
    pub fn len(&self) -> usize {
        match self {
            Stream::Docs(d) => d.len(),
            Stream::Samples(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_samples(self) -> Vec<FimRecord> {
        match self {
            Stream::Docs(d) => d.into_iter().map(FimRecord::plain).collect(),
            Stream::Samples(s) => s,
        }
    }

    fn write(&self, path: &Path) -> Result<u64> {
        match self {
            Stream::Docs(d) => write_records(d, path),
            Stream::Samples(s) => write_records(s, path),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub manifests: Vec<PipelineManifest>,
    pub clusters: Vec<DedupCluster>,
    pub output: Stream,
}

impl RunOutput {
    pub fn manifest(&self, stage: Stage) -> &PipelineManifest {
        &self.manifests[Stage::ALL
            .iter()
            .position(|&s| s == stage)
            .expect("known stage")]
    }
}

fn lang_key(doc: &Document) -> String {
    match doc.language {
        Some(l) => l.name().to_string(),
        None => format!("kind:{}", doc.source_kind),
    }
}

fn histogram<'a>(
    m: &mut PipelineManifest,
    docs: impl IndexedParallelIterator<Item = (&'a Document, &'a str)>,
    counter: &TokenCounter,
) -> Result<()> {
    let rows: Vec<(String, u64)> = docs
        .map(|(d, text)| Ok((lang_key(d), count_tokens(text, counter)?)))
        .collect::<Result<_>>()?;
    for (k, t) in rows {
        m.add_language(&k, t);
    }
    Ok(())
}

fn doc_histogram(
    m: &mut PipelineManifest,
    docs: &[Document],
    counter: &TokenCounter,
) -> Result<()> {
    histogram(m, docs.par_iter().map(|d| (d, d.content.as_str())), counter)
}

/// Applies a per-document decision in parallel and records it in order.
fn filter_stage<F>(
    m: &mut PipelineManifest,
    docs: Vec<Document>,
    decide: F,
) -> Result<Vec<Document>>
where
    F: Fn(Document) -> Result<(FilterVerdict, Document)> + Sync + Send,
{
    let decided: Vec<(FilterVerdict, Document)> =
        docs.into_par_iter().map(decide).collect::<Result<_>>()?;
    let mut kept = Vec::with_capacity(decided.len());
    for (v, d) in decided {
        m.record(&v);
        if v.keep {
            kept.push(d);
        }
    }
    Ok(kept)
}

fn digest_of<T: Serialize>(value: &T) -> String {
    config_digest(value)
}

fn skipped(stage: Stage, digest: String, seed: u64, n: usize) -> PipelineManifest {
    let mut m = PipelineManifest::new(stage.name(), digest, seed);
    m.skipped = true;
    m.input_count = n as u64;
    m.kept_count = n as u64;
    m
}

fn ingest(cfg: &PipelineConfig, docs: Vec<Document>) -> Result<(Vec<Document>, PipelineManifest)> {
    let mut m = PipelineManifest::new(Stage::Ingest.name(), digest_of(&cfg.tokens), cfg.seed);
    let docs: Vec<Document> = docs
        .into_par_iter()
        .map(|d| {
            if d.source_kind == SourceKind::Code && d.language.is_none() {
                let lang = assign_language(&d.path);
                d.with_language(lang)
            } else {
                d
            }
        })
        .collect();
    for d in &docs {
        d.validate().map_err(|msg| Error::MalformedRecord {
            line: 0,
            offset: 0,
            message: format!("{}: {msg}", d.id),
        })?;
        m.record_kept();
    }
    doc_histogram(&mut m, &docs, &cfg.tokens)?;
    Ok((docs, m))
}

/// One document-to-document stage; a disabled stage passes `docs` through.
fn doc_stage(
    stage: Stage,
    cfg: &PipelineConfig,
    docs: Vec<Document>,
    clusters: &mut Vec<DedupCluster>,
) -> Result<(Vec<Document>, PipelineManifest)> {
    let seed = cfg.seed;
    let on = cfg.stages.get(stage);
    let digest = match stage {
        Stage::LicenseLanguage => digest_of(&cfg.filter),
        Stage::Quality => digest_of(&(&cfg.quality, &cfg.issue)),
        Stage::ExactDedup => digest_of(&"sha256"),
        Stage::FuzzyDedup => digest_of(&cfg.dedup),
        Stage::Hap => digest_of(&cfg.hap.resolve()?),
        Stage::Pii => digest_of(&cfg.pii),
        Stage::Malware => digest_of(&cfg.malware),
        _ => unreachable!("not a document stage"),
    };
    let scanner_missing = stage == Stage::Malware && cfg.malware.command.is_none();
    if !on || scanner_missing {
        let n = docs.len();
        return Ok((docs, skipped(stage, digest, seed, n)));
    }
    let mut m = PipelineManifest::new(stage.name(), digest, seed);
    let kept = match stage {
        Stage::LicenseLanguage => {
            let allow = cfg.filter.allowlist()?;
            let permissive = cfg.filter.permissive()?;
            filter_stage(&mut m, docs, |d| {
                let v = if d.source_kind == SourceKind::Code {
                    filter_language(&d, &allow).merge(filter_license(&d, &permissive))
                } else {
                    FilterVerdict::keep()
                };
                Ok((v, d))
            })?
        }
        Stage::Quality => filter_stage(&mut m, docs, |mut d| {
            match apply_quality(&d, &cfg.quality, &cfg.issue) {
                Ok(out) => {
                    if let Some(c) = out.content {
                        d.content = c;
                    }
                    Ok((out.verdict, d))
                }
                Err(Error::IssueFormat(_)) => Ok((FilterVerdict::drop(reason::ISSUE_FORMAT), d)),
                Err(e) => Err(e),
            }
        })?,
        Stage::ExactDedup => {
            let n = docs.len();
            let (kept, dropped) = exact_dedup(docs);
            m.input_count = n as u64;
            m.kept_count = kept.len() as u64;
            m.dropped_count = dropped as u64;
            if dropped > 0 {
                m.drop_reasons
                    .insert(reason::EXACT_DUP.into(), dropped as u64);
            }
            kept
        }
        Stage::FuzzyDedup => {
            let n = docs.len();
            let out = fuzzy_dedup(docs, &cfg.dedup)?;
            m.input_count = n as u64;
            m.kept_count = out.kept.len() as u64;
            m.dropped_count = out.dropped() as u64;
            if out.dropped() > 0 {
                m.drop_reasons
                    .insert(reason::FUZZY_DUP.into(), out.dropped() as u64);
            }
            for c in &out.clusters {
                *m.cluster_sizes.entry(c.size() as u64).or_default() += 1;
            }
            m.bump("clusters", out.clusters.len() as u64);
            *clusters = out.clusters;
            out.kept
        }
        Stage::Hap => {
            let matcher = HapMatcher::new(&cfg.hap.resolve()?)?;
            filter_stage(&mut m, docs, |mut d| {
                let count = matcher.count(&d.content);
                d.annotations.insert("hap_count".into(), count.to_string());
                Ok((matcher.verdict(count), d))
            })?
        }
        Stage::Pii => {
            let detector = RuleDetector::new(cfg.pii.tokens.clone());
            let redacted: Vec<(Document, Vec<String>)> = docs
                .into_par_iter()
                .map(|mut d| {
                    let spans = detector.detect(&d.content, d.source_kind);
                    if spans.is_empty() {
                        return Ok((d, Vec::new()));
                    }
                    let mut rng = doc_rng(seed, "pii", &d.id);
                    d.content = redact_pii(&d.content, &spans, &cfg.pii.tokens, &mut rng)?;
                    d.annotations
                        .insert("pii_redactions".into(), spans.len().to_string());
                    let kinds = spans
                        .iter()
                        .map(|s| {
                            let v = serde_json::to_value(s.kind).expect("kind serializes");
                            v.as_str().unwrap_or_default().to_string()
                        })
                        .collect();
                    Ok((d, kinds))
                })
                .collect::<Result<_>>()?;
            let mut kept = Vec::with_capacity(redacted.len());
            for (d, kinds) in redacted {
                m.record_kept();
                if !kinds.is_empty() {
                    m.bump("docs_redacted", 1);
                }
                for k in kinds {
                    m.bump(&format!("pii:{k}"), 1);
                }
                kept.push(d);
            }
            kept
        }
        Stage::Malware => {
            let scanned: Vec<(Document, Result<ScanOutcome>)> = docs
                .into_par_iter()
                .map(|d| {
                    let r = malware_scan_hook(&d.content, &cfg.malware);
                    (d, r)
                })
                .collect();
            let mut kept = Vec::with_capacity(scanned.len());
            for (d, r) in scanned {
                let verdict = match r {
                    Ok(ScanOutcome::Scanned(v)) => v,
                    Ok(ScanOutcome::Skipped) => FilterVerdict::keep(),
                    Err(e) if cfg.malware.strict => return Err(e),
                    Err(e) => {
                        m.bump("scanner_error", 1);
                        if m.warnings.is_empty() {
                            m.warnings.push(format!("scanner_unavailable: {e}"));
                        }
                        FilterVerdict::keep()
                    }
                };
                m.record(&verdict);
                if verdict.keep {
                    kept.push(d);
                }
            }
            kept
        }
        _ => unreachable!(),
    };
    doc_histogram(&mut m, &kept, &cfg.tokens)?;
    Ok((kept, m))
}

fn fim_stage(cfg: &PipelineConfig, docs: Vec<Document>) -> Result<(Stream, PipelineManifest)> {
    let digest = digest_of(&cfg.fim);
    if !cfg.stages.fim {
        let n = docs.len();
        return Ok((Stream::Docs(docs), skipped(Stage::Fim, digest, cfg.seed, n)));
    }
    let mut m = PipelineManifest::new(Stage::Fim.name(), digest, cfg.seed);
    let built: Vec<(FimRecord, Option<&'static str>)> = docs
        .into_par_iter()
        .map(|mut d| {
            let b = build_sample(&d, &cfg.fim, cfg.seed);
            if cfg.fim.drop_original {
                d.content.clear();
            }
            let rec = FimRecord {
                doc: d,
                mode: Some(b.sample.mode),
                serialized: Some(b.sample.serialized),
            };
            (rec, b.fallback.map(|f| f.code()))
        })
        .collect();
    let mut out = Vec::with_capacity(built.len());
    for (rec, fallback) in built {
        m.record_kept();
        let mode = serde_json::to_value(rec.mode).expect("mode serializes");
        m.bump(&format!("mode:{}", mode.as_str().unwrap_or_default()), 1);
        if let Some(code) = fallback {
            m.bump(code, 1);
        }
        out.push(rec);
    }
    histogram(
        &mut m,
        out.par_iter().map(|r| (&r.doc, r.training_text())),
        &cfg.tokens,
    )?;
    Ok((Stream::Samples(out), m))
}

fn mix_stage(cfg: &PipelineConfig, input: Stream) -> Result<(Stream, PipelineManifest)> {
    let Some(spec) = cfg.mixture.as_ref().filter(|_| cfg.stages.mix) else {
        let n = input.len();
        return Ok((
            input,
            skipped(Stage::Mix, digest_of(&cfg.mixture), cfg.seed, n),
        ));
    };
    // Source locations are left out so relocated inputs digest the same.
    let shape: Vec<(&str, f64)> = spec
        .components
        .iter()
        .map(|c| (c.name.as_str(), c.weight))
        .collect();
    let digest = digest_of(&(shape, spec.token_budget, spec.seed, &cfg.tokens, cfg.repeat));
    let sources = load_sources(spec, Some(input.into_samples()))?;
    let out = sample_stream(spec, sources, &cfg.tokens, cfg.repeat)?;
    let m = out.manifest(digest, cfg.seed);
    Ok((Stream::Samples(out.records), m))
}

/// Writes a stage's records (unless skipped or streaming) and its manifest.
fn emit<T: Serialize>(
    cfg: &PipelineConfig,
    dir: Option<&Path>,
    stage: Stage,
    records: &[T],
    m: &PipelineManifest,
) -> Result<()> {
    if let Some(dir) = dir {
        if !cfg.streaming && !m.skipped {
            write_records(records, dir.join(format!("{}.jsonl", stage.name())))?;
        }
        m.write(dir)?;
    }
    Ok(())
}

fn emit_stream(
    cfg: &PipelineConfig,
    dir: Option<&Path>,
    stage: Stage,
    s: &Stream,
    m: &PipelineManifest,
) -> Result<()> {
    match s {
        Stream::Docs(d) => emit(cfg, dir, stage, d, m),
        Stream::Samples(r) => emit(cfg, dir, stage, r, m),
    }
}

fn execute(cfg: &PipelineConfig, docs: Vec<Document>, out_dir: Option<&Path>) -> Result<RunOutput> {
    let mut manifests = Vec::with_capacity(Stage::ALL.len());
    let mut clusters = Vec::new();

    let (mut docs, m) = ingest(cfg, docs)?;
    emit(cfg, out_dir, Stage::Ingest, &docs, &m)?;
    manifests.push(m);

    for &stage in &Stage::ALL[1..8] {
        let (kept, m) = doc_stage(stage, cfg, docs, &mut clusters)?;
        docs = kept;
        debug_assert!(m.check().is_ok(), "{:?}", m.check());
        emit(cfg, out_dir, stage, &docs, &m)?;
        manifests.push(m);
    }

    let (stream, m) = fim_stage(cfg, docs)?;
    emit_stream(cfg, out_dir, Stage::Fim, &stream, &m)?;
    manifests.push(m);
    let (stream, m) = mix_stage(cfg, stream)?;
    emit_stream(cfg, out_dir, Stage::Mix, &stream, &m)?;
    manifests.push(m);

    if let Some(dir) = out_dir {
        stream.write(&dir.join("output.jsonl"))?;
        if !manifests[Stage::FuzzyDedup as usize].skipped {
            write_records(&clusters, dir.join("clusters.jsonl"))?;
        }
    }
    Ok(RunOutput {
        manifests,
        clusters,
        output: stream,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every stage over in-memory documents. With `out_dir`, writes stage
/// records, manifests, `output.jsonl` and `clusters.jsonl` there.
pub fn run_on(
    cfg: &PipelineConfig,
    docs: Vec<Document>,
    out_dir: Option<&Path>,
) -> Result<RunOutput> {
    cfg.validate()?;
    pool(cfg.workers)?.install(|| execute(cfg, docs, out_dir))
}

/// The mixture sampler on its own; `workers` threads count tokens.
pub fn run_mix(
    spec: &MixtureSpec,
    pipeline_input: Option<Vec<FimRecord>>,
    counter: &TokenCounter,
    repeat: bool,
    workers: usize,
) -> Result<MixOutcome> {
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    spec.validate()?;
    let sources = load_sources(spec, pipeline_input)?;
    pool(workers)?.install(|| sample_stream(spec, sources, counter, repeat))
}

/// Reads `cfg.input`, runs the pipeline into `cfg.output`, and leaves a
/// `PARTIAL` marker there if any stage fails.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutput> {
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| Error::Config("no input path configured".into()))?;
    let out: PathBuf = cfg
        .output
        .clone()
        .ok_or_else(|| Error::Config("no output path configured".into()))?;
    cfg.validate()?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let marker = out.join(PARTIAL_MARKER);
    if marker.exists() {
        std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    let result = read_all::<Document>(&input).and_then(|docs| run_on(cfg, docs, Some(&out)));
    if let Err(e) = &result {
        std::fs::write(&marker, format!("{e}\n")).map_err(|io| Error::io(&marker, io))?;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::LanguageTag;
    use crate::fim::FimMode;

    fn corpus() -> Vec<Document> {
        let body = |i: usize| {
            format!("def handler_{i}(request):\n    return render(request, 'page_{i}.html')\n")
        };
        let mut docs: Vec<Document> = (0..12)
            .map(|i| {
                Document::new(format!("d{i}"), format!("app/m{i}.py"), body(i)).with_license("MIT")
            })
            .collect();
        docs.push(Document::new("dup", "app/copy.py", body(0)).with_license("MIT"));
        docs.push(Document::new("gpl", "app/g.py", body(99)).with_license("GPL-3.0"));
        docs.push(Document::new("nums", "app/n.py", "1234 5678 9012").with_license("MIT"));
        docs.push(
            Document::new(
                "mail",
                "app/e.py",
                "# contact: jane.doe@example.com\nx = 1\n",
            )
            .with_license("MIT"),
        );
        docs
    }

    #[test]
    fn empty_corpus_gives_empty_manifests() {
        let out = run_on(&PipelineConfig::default(), Vec::new(), None).unwrap();
        assert!(out.output.is_empty());
        assert_eq!(out.manifests.len(), Stage::ALL.len());
        assert!(out
            .manifests
            .iter()
            .all(|m| m.input_count == 0 && m.check().is_ok()));
    }

    #[test]
    fn funnel_and_reasons() {
        let out = run_on(&PipelineConfig::default(), corpus(), None).unwrap();
        assert_eq!(out.manifest(Stage::Ingest).kept_count, 16);
        let ll = out.manifest(Stage::LicenseLanguage);
        assert_eq!(ll.drop_reasons.get("license_not_permissive"), Some(&1));
        assert_eq!(
            out.manifest(Stage::Quality).drop_reasons.get("low_alpha"),
            Some(&1)
        );
        assert_eq!(out.manifest(Stage::ExactDedup).dropped_count, 1);
        assert_eq!(out.manifest(Stage::Pii).counters.get("pii:email"), Some(&1));
        assert!(out.manifest(Stage::Malware).skipped);
        let samples = out.output.into_samples();
        assert_eq!(samples.len(), 13);
        let mail = samples.iter().find(|s| s.doc.id == "mail").unwrap();
        assert!(mail.doc.content.contains("<EMAIL>"));
        assert_eq!(mail.doc.language, LanguageTag::new("Python").ok());
        for s in &samples {
            assert!(s.mode.is_some());
        }
        let total: u64 = out.manifests.iter().map(|m| m.dropped_count).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = PipelineConfig::default();
        cfg.seed = 11;
        let one = run_on(&cfg, corpus(), None).unwrap();
        cfg.workers = 8;
        let eight = run_on(&cfg, corpus(), None).unwrap();
        assert_eq!(one, eight);
    }

    #[test]
    fn disabled_stage_is_identity() {
        let mut cfg = PipelineConfig::default();
        cfg.stages = super::super::StageToggles::none();
        let out = run_on(&cfg, corpus(), None).unwrap();
        let Stream::Docs(docs) = out.output else {
            panic!("fim disabled keeps documents")
        };
        let (ingested, _) = ingest(&cfg, corpus()).unwrap();
        assert_eq!(docs, ingested);
        assert!(out.manifests[1..].iter().all(|m| m.skipped));
    }

    #[test]
    fn fim_modes_are_recorded() {
        let mut cfg = PipelineConfig::default();
        cfg.fim.alpha = 0.0;
        cfg.fim.psm_fraction = 1.0;
        let out = run_on(&cfg, corpus(), None).unwrap();
        assert_eq!(out.manifest(Stage::Fim).counters["mode:PSM"], 13);
        let samples = out.output.into_samples();
        assert!(samples.iter().all(|s| s.mode == Some(FimMode::Psm)));
    }

    #[test]
    fn failing_run_leaves_partial_marker() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.jsonl");
        std::fs::write(&input, "{\"id\":\"a\"}\n").unwrap();
        let cfg = PipelineConfig {
            input: Some(input),
            output: Some(dir.path().join("out")),
            ..PipelineConfig::default()
        };
        assert!(run_pipeline(&cfg).is_err());
        assert!(dir.path().join("out").join(PARTIAL_MARKER).exists());
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use curator_core::corpus_io::{read_all, write_records};
use curator_core::dedup::GroupBy;
use curator_core::fim::{FimRecord, SpmLayout};
use curator_core::mixture::{MixtureComponent, MixtureSpec};
use curator_core::pipeline::{
    bench_quality_exact, run_mix, run_pipeline, stats_report, synthetic_corpus, PipelineConfig, Stage,
    StageToggles,
};
use curator_core::Error;

#[derive(Parser)]
#[command(name = "curator", version, about = "Curate code pretraining corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate records and assign languages.
    Ingest(StageArgs),
    /// Language/license allowlists and quality rules.
    Filter(StageArgs),
    /// Exact and near-duplicate removal.
    Dedup(StageArgs),
    /// HAP filtering, PII redaction and the optional malware hook.
    Redact(StageArgs),
    /// Build CLM/PSM/SPM samples.
    Fim(StageArgs),
    /// Token-budgeted mixture of component streams.
    Mix(MixArgs),
    /// Every enabled stage in order.
    Run(StageArgs),
    /// Funnel, histograms and invariant checks from a run's manifests.
    Stats {
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Throughput of the quality rules plus exact dedup.
    Bench {
        /// Megabytes of synthetic input.
        #[arg(long, default_value_t = 64)]
        mb: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the effective configuration as TOML.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    Global,
    Language,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Header,
    Reordered,
}

#[derive(Args)]
struct StageArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Only write the final records, not every stage's.
    #[arg(long)]
    streaming: bool,
    #[arg(long, value_enum)]
    group_by: Option<GroupArg>,
    /// Scanner command; `{file}` is replaced by the document path.
    #[arg(long)]
    scan_command: Option<String>,
    /// Abort when the scanner fails instead of keeping the document.
    #[arg(long)]
    strict_scan: bool,
    /// Cycle exhausted mixture sources.
    #[arg(long)]
    repeat: bool,
    /// HAP keyword list, one per line.
    #[arg(long)]
    hap_dictionary: Option<PathBuf>,
    #[arg(long)]
    fim_rate: Option<f64>,
    #[arg(long, value_enum)]
    spm_layout: Option<LayoutArg>,
    #[arg(long)]
    drop_original: bool,
}

#[derive(Args)]
struct MixArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Records standing in for `@pipeline` sources.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    output: PathBuf,
    /// `name:weight:path`, repeatable; replaces the configured components.
    #[arg(long = "component")]
    components: Vec<String>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    repeat: bool,
}

fn load_config(path: Option<&Path>) -> anyhow::Result<PipelineConfig> {
    Ok(match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    })
}

fn stage_config(args: &StageArgs, stages: Option<&[Stage]>) -> anyhow::Result<PipelineConfig> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(s) = stages {
        cfg.stages = StageToggles::only(s);
    }
    if args.input.is_some() {
        cfg.input = args.input.clone();
    }
    if args.output.is_some() {
        cfg.output = args.output.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.streaming |= args.streaming;
    cfg.repeat |= args.repeat;
    if let Some(g) = args.group_by {
        cfg.dedup.group_by = match g {
            GroupArg::Global => GroupBy::Global,
            GroupArg::Language => GroupBy::Language,
        };
    }
    if args.scan_command.is_some() {
        cfg.malware.command = args.scan_command.clone();
    }
    cfg.malware.strict |= args.strict_scan;
    if args.hap_dictionary.is_some() {
        cfg.hap.dictionary_file = args.hap_dictionary.clone();
    }
    if let Some(r) = args.fim_rate {
        cfg.fim.alpha = 1.0 - r;
    }
    if let Some(l) = args.spm_layout {
        cfg.fim.spm_layout = match l {
            LayoutArg::Header => SpmLayout::PrefixSuffixHeader,
            LayoutArg::Reordered => SpmLayout::Reordered,
        };
    }
    cfg.fim.drop_original |= args.drop_original;
    Ok(cfg)
}

fn run_stages(args: &StageArgs, stages: Option<&[Stage]>) -> anyhow::Result<ExitCode> {
    let cfg = stage_config(args, stages)?;
    if cfg.input.is_none() || cfg.output.is_none() {
        return Err(Error::Config("--input and --output are required (or set them in the config)".into()).into());
    }
    let out = run_pipeline(&cfg)?;
    for m in &out.manifests {
        if !m.skipped {
            eprintln!(
                "{:<18} in {:>8}  kept {:>8}  dropped {:>8}",
                m.stage_name, m.input_count, m.kept_count, m.dropped_count
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_component(s: &str) -> anyhow::Result<MixtureComponent> {
    let mut parts = s.splitn(3, ':');
    let (Some(name), Some(weight), Some(source)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::Config(format!("component `{s}` is not name:weight:path")).into());
    };
    let weight = weight
        .parse()
        .map_err(|_| Error::Config(format!("component `{s}`: bad weight")))?;
    Ok(MixtureComponent {
        name: name.into(),
        weight,
        source: source.into(),
    })
}

fn mix(args: &MixArgs) -> anyhow::Result<ExitCode> {
    let cfg = load_config(args.config.as_deref())?;
    let mut spec = cfg.mixture.clone().unwrap_or(MixtureSpec {
        components: Vec::new(),
        token_budget: 0,
        seed: cfg.seed,
    });
    if !args.components.is_empty() {
        spec.components = args.components.iter().map(|c| parse_component(c)).collect::<anyhow::Result<_>>()?;
    }
    if let Some(b) = args.budget {
        spec.token_budget = b;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let pipeline = match &args.input {
        Some(p) => Some(read_all::<FimRecord>(p)?),
        None => None,
    };
    let workers = args.workers.unwrap_or(cfg.workers);
    let out = run_mix(&spec, pipeline, &cfg.tokens, args.repeat || cfg.repeat, workers)?;
    std::fs::create_dir_all(&args.output).map_err(|e| Error::io(&args.output, e))?;
    write_records(&out.records, args.output.join("mix.jsonl"))?;
    let digest = curator_core::corpus_io::config_digest(&(&spec, &cfg.tokens));
    out.manifest(digest, spec.seed).write(&args.output)?;
    for (i, c) in out.components.iter().enumerate() {
        eprintln!(
            "{:<16} weight {:.4}  share {:.4}  tokens {:>10}  docs {:>8}",
            c.name,
            c.weight,
            out.share(i),
            c.emitted_tokens,
            c.emitted_docs
        );
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    Ok(ExitCode::SUCCESS)
}

fn stats(dir: &Path, json: bool) -> anyhow::Result<ExitCode> {
    let report = stats_report(dir)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report.json())?);
    } else {
        print!("{}", report.text());
    }
    Ok(if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn bench(mb: usize, threads: usize, seed: u64) -> anyhow::Result<ExitCode> {
    if mb == 0 {
        bail!(Error::Config("--mb must be positive".into()));
    }
    let docs = synthetic_corpus(mb * 1_000_000, seed);
    let r = bench_quality_exact(docs, threads)?;
    println!(
        "quality+exact_dedup: {:.1} MB in {:.3} s on {} thread(s) = {:.1} MB/s ({} of {} docs kept)",
        r.bytes as f64 / 1e6,
        r.seconds,
        r.threads,
        r.mb_per_s,
        r.kept,
        r.docs
    );
    println!("{}", serde_json::to_string(&r)?);
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    use Stage::*;
    match cli.command {
        Command::Ingest(a) => run_stages(&a, Some(&[])),
        Command::Filter(a) => run_stages(&a, Some(&[LicenseLanguage, Quality])),
        Command::Dedup(a) => run_stages(&a, Some(&[ExactDedup, FuzzyDedup])),
        Command::Redact(a) => run_stages(&a, Some(&[Hap, Pii, Malware])),
        Command::Fim(a) => run_stages(&a, Some(&[Fim])),
        Command::Run(a) => run_stages(&a, None),
        Command::Mix(a) => mix(&a),
        Command::Stats { dir, json } => stats(&dir, json),
        Command::Bench { mb, threads, seed } => bench(mb, threads, seed),
        Command::Config { config } => {
            let cfg = load_config(config.as_deref())?;
            print!("{}", cfg.to_toml().context("rendering config")?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<Error>())
        .map_or(1, |e| e.class().exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

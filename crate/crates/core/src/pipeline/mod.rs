//! Stage orchestration: configuration, the fixed stage order, per-stage
//! manifests, the stats report and a throughput benchmark.

mod bench;
mod config;
mod run;
mod stats;

use std::fmt;
use std::str::FromStr;

pub use bench::{bench_quality_exact, synthetic_corpus, BenchReport};
pub use config::{FilterSection, HapSection, PiiSection, PipelineConfig, StageToggles};
pub use run::{run_mix, run_on, run_pipeline, RunOutput, Stream, PARTIAL_MARKER};
pub use stats::{stats_report, Check, StatsReport};

use crate::error::Error;

/// Stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    LicenseLanguage,
    Quality,
    ExactDedup,
    FuzzyDedup,
    Hap,
    Pii,
    Malware,
    Fim,
    Mix,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Ingest,
        Stage::LicenseLanguage,
        Stage::Quality,
        Stage::ExactDedup,
        Stage::FuzzyDedup,
        Stage::Hap,
        Stage::Pii,
        Stage::Malware,
        Stage::Fim,
        Stage::Mix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::LicenseLanguage => "license_language",
            Stage::Quality => "quality",
            Stage::ExactDedup => "exact_dedup",
            Stage::FuzzyDedup => "fuzzy_dedup",
            Stage::Hap => "hap",
            Stage::Pii => "pii",
            Stage::Malware => "malware",
            Stage::Fim => "fim",
            Stage::Mix => "mix",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verdict::{reason, FilterVerdict};

/// External scanner invocation. `command` is split on whitespace and every
/// `{file}` is replaced by a temporary file holding the document content.
///
/// Exit status contract (the one `clamscan` uses): 0 clean, 1 infected,
/// anything else is a scanner failure.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub command: Option<String>,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanOutcome {
    Skipped,
    Scanned(FilterVerdict),
}

pub fn malware_scan_hook(content: &str, cfg: &ScanConfig) -> Result<ScanOutcome> {
    let Some(template) = cfg.command.as_deref().filter(|c| !c.trim().is_empty()) else {
        return Ok(ScanOutcome::Skipped);
    };
    let mut file = tempfile::NamedTempFile::new()
        .map_err(|e| Error::ScannerUnavailable(format!("temp file: {e}")))?;
    file.write_all(content.as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| Error::ScannerUnavailable(format!("temp file: {e}")))?;
    let path = file.path().to_string_lossy().into_owned();
    let mut parts = template
        .split_whitespace()
        .map(|p| p.replace("{file}", &path));
    let program = parts.next().expect("non-empty template");
    let status = Command::new(&program)
        .args(parts)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .map_err(|e| Error::ScannerUnavailable(format!("{program}: {e}")))?;
    match status.code() {
        Some(0) => Ok(ScanOutcome::Scanned(FilterVerdict::keep())),
        Some(1) => Ok(ScanOutcome::Scanned(FilterVerdict::drop(reason::MALWARE))),
        code => Err(Error::ScannerUnavailable(format!(
            "{program} exited with {code:?}"
        ))),
    }
}

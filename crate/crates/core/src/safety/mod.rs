//! HAP keyword filtering, PII detection and redaction, and the external
//! malware-scan hook.

mod hap;
mod malware;
mod pii;
mod redact;

pub use hap::{hap_count, load_dictionary, HapConfig, HapMatcher, MatchMode};
pub use malware::{malware_scan_hook, ScanConfig, ScanOutcome};
pub use pii::{
    detect_pii, PiiDetector, PiiKind, PiiSpan, PiiTokens, RuleDetector, KEY_MIN_ENTROPY,
    KEY_MIN_LEN,
};
pub use redact::{is_documentation_ip, redact_pii, synthetic_ip, DOC_V4_NETS};

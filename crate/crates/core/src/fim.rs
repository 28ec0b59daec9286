//! Fill-in-the-middle sample construction.
//!
//! Each document becomes either a plain causal sample (probability `alpha`)
//! or a FIM sample split at two random character boundaries and serialized
//! in prefix-suffix-middle or suffix-prefix-middle order.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{Document, Record};
use crate::error::{Error, Result};
use crate::seed::doc_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FimMode {
    #[serde(rename = "CLM")]
    Clm,
    #[serde(rename = "PSM")]
    Psm,
    #[serde(rename = "SPM")]
    Spm,
}

/// Token layout used for SPM samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpmLayout {
    /// `<pre><suf>suffix<mid>prefix middle`
    #[default]
    PrefixSuffixHeader,
    /// `<suf>suffix<pre>prefix<mid>middle`
    Reordered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FimTokens {
    pub prefix: String,
    pub suffix: String,
    pub middle: String,
}

impl Default for FimTokens {
    fn default() -> Self {
        FimTokens {
            prefix: "<fim_prefix>".into(),
            suffix: "<fim_suffix>".into(),
            middle: "<fim_middle>".into(),
        }
    }
}

impl FimTokens {
    fn all(&self) -> [&str; 3] {
        [&self.prefix, &self.suffix, &self.middle]
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.all();
        for (i, a) in all.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::Config("FIM control tokens must be non-empty".into()));
            }
            for (j, b) in all.iter().enumerate() {
                if i != j && b.contains(a) {
                    return Err(Error::Config(format!(
                        "FIM control token `{a}` occurs inside `{b}`"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn occurs_in(&self, text: &str) -> bool {
        self.all().iter().any(|t| text.contains(t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FimConfig {
    /// Probability that a sample stays a plain causal sample.
    pub alpha: f64,
    /// Share of FIM samples serialized as PSM.
    pub psm_fraction: f64,
    pub tokens: FimTokens,
    pub min_doc_chars: usize,
    pub spm_layout: SpmLayout,
    pub drop_original: bool,
}

impl Default for FimConfig {
    fn default() -> Self {
        FimConfig {
            alpha: 0.5,
            psm_fraction: 0.5,
            tokens: FimTokens::default(),
            min_doc_chars: 10,
            spm_layout: SpmLayout::PrefixSuffixHeader,
            drop_original: false,
        }
    }
}

impl FimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.psm_fraction) {
            return Err(Error::Config(
                "alpha and psm_fraction must lie in [0,1]".into(),
            ));
        }
        self.tokens.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FimSample {
    pub doc_id: String,
    pub mode: FimMode,
    pub prefix: String,
    pub middle: String,
    pub suffix: String,
    pub serialized: String,
}

/// Why a document that drew FIM was emitted as CLM instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClmFallback {
    TooShort,
    TokenCollision,
}

impl ClmFallback {
    pub fn code(self) -> &'static str {
        match self {
            ClmFallback::TooShort => "fim_too_short",
            ClmFallback::TokenCollision => "fim_token_collision",
        }
    }
}

/// Char-boundary byte offsets of `content`, including the end.
fn boundaries(content: &str) -> Vec<usize> {
    content
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(content.len()))
        .collect()
}

/// Splits at two given character positions (`first <= second`).
pub fn split_at_chars(content: &str, first: usize, second: usize) -> (String, String, String) {
    let b = boundaries(content);
    assert!(
        first <= second && second < b.len(),
        "cut points out of range"
    );
    let (x, y) = (b[first], b[second]);
    (
        content[..x].to_string(),
        content[x..y].to_string(),
        content[y..].to_string(),
    )
}

/// Two distinct cut points drawn uniformly from the `len + 1` character
/// boundaries; the middle part is therefore never empty.
pub fn split_document(
    content: &str,
    min_doc_chars: usize,
    rng: &mut impl Rng,
) -> Result<(String, String, String)> {
    let len = content.chars().count();
    if len < min_doc_chars.max(1) {
        return Err(Error::FimTooShort {
            len,
            min: min_doc_chars.max(1),
        });
    }
    let picks = sample(rng, len + 1, 2);
    let (a, b) = (picks.index(0), picks.index(1));
    Ok(split_at_chars(content, a.min(b), a.max(b)))
}

pub fn serialize(
    mode: FimMode,
    prefix: &str,
    middle: &str,
    suffix: &str,
    tokens: &FimTokens,
    layout: SpmLayout,
) -> String {
    let FimTokens {
        prefix: p,
        suffix: s,
        middle: m,
    } = tokens;
    match mode {
        FimMode::Clm => format!("{prefix}{middle}{suffix}"),
        FimMode::Psm => format!("{p}{prefix}{s}{suffix}{m}{middle}"),
        FimMode::Spm => match layout {
            SpmLayout::PrefixSuffixHeader => format!("{p}{s}{suffix}{m}{prefix}{middle}"),
            SpmLayout::Reordered => format!("{s}{suffix}{p}{prefix}{m}{middle}"),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFim {
    pub mode: FimMode,
    pub prefix: String,
    pub middle: String,
    pub suffix: String,
}

fn single(text: &str, tok: &str) -> Result<usize> {
    let mut hits = text.match_indices(tok).map(|(i, _)| i);
    match (hits.next(), hits.next()) {
        (Some(i), None) => Ok(i),
        (None, _) => Err(Error::FimMalformed(format!("missing `{tok}`"))),
        (Some(_), Some(_)) => Err(Error::FimMalformed(format!("repeated `{tok}`"))),
    }
}

/// Inverse of [`serialize`] for FIM modes.
///
/// The default SPM layout writes prefix and middle back to back, so their
/// boundary is not recoverable from text: a `<pre><suf>` header parses as
/// SPM with an empty prefix and the whole tail as middle. A PSM sample with
/// an empty prefix has the same text and parses the same way.
pub fn parse_fim(serialized: &str, tokens: &FimTokens) -> Result<ParsedFim> {
    let (p, s, m) = (&tokens.prefix, &tokens.suffix, &tokens.middle);
    let ip = single(serialized, p)?;
    let is = single(serialized, s)?;
    let im = single(serialized, m)?;
    let tail = &serialized[im + m.len()..];
    let between = |from: usize, tok: &str, to: usize| &serialized[from + tok.len()..to];

    if ip == 0 && is > ip && im > is {
        let prefix = between(ip, p, is);
        let mode = if prefix.is_empty() {
            FimMode::Spm
        } else {
            FimMode::Psm
        };
        return Ok(ParsedFim {
            mode,
            prefix: prefix.into(),
            middle: tail.into(),
            suffix: between(is, s, im).into(),
        });
    }
    if is == 0 && ip > is && im > ip {
        return Ok(ParsedFim {
            mode: FimMode::Spm,
            prefix: between(ip, p, im).into(),
            middle: tail.into(),
            suffix: between(is, s, ip).into(),
        });
    }
    Err(Error::FimMalformed("control tokens out of order".into()))
}

/// [`parse_fim`] for samples written with a known SPM layout. Under
/// [`SpmLayout::Reordered`] a leading prefix token always means PSM, which
/// makes the parse an exact inverse of [`serialize`].
pub fn parse_fim_in(serialized: &str, tokens: &FimTokens, layout: SpmLayout) -> Result<ParsedFim> {
    let mut parsed = parse_fim(serialized, tokens)?;
    if layout == SpmLayout::Reordered && serialized.starts_with(tokens.prefix.as_str()) {
        parsed.mode = FimMode::Psm;
    }
    Ok(parsed)
}

/// Parses a sample whose SPM layout is known to be the default header form,
/// where the split between prefix and middle is carried separately.
pub fn parse_spm_header(
    serialized: &str,
    tokens: &FimTokens,
    prefix_chars: usize,
) -> Result<ParsedFim> {
    let parsed = parse_fim(serialized, tokens)?;
    let joined = parsed.middle;
    let cut = joined
        .char_indices()
        .nth(prefix_chars)
        .map_or(joined.len(), |(i, _)| i);
    if prefix_chars > joined.chars().count() {
        return Err(Error::FimMalformed("prefix longer than tail".into()));
    }
    Ok(ParsedFim {
        mode: FimMode::Spm,
        prefix: joined[..cut].into(),
        middle: joined[cut..].into(),
        suffix: parsed.suffix,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltSample {
    pub sample: FimSample,
    pub fallback: Option<ClmFallback>,
}

/// Builds one sample. Randomness comes only from `rng`.
pub fn build_sample_with(doc: &Document, cfg: &FimConfig, rng: &mut impl Rng) -> BuiltSample {
    let clm = |fallback| BuiltSample {
        sample: FimSample {
            doc_id: doc.id.clone(),
            mode: FimMode::Clm,
            prefix: doc.content.clone(),
            middle: String::new(),
            suffix: String::new(),
            serialized: doc.content.clone(),
        },
        fallback,
    };
    let stays_clm = rng.random::<f64>() < cfg.alpha;
    let psm = rng.random::<f64>() < cfg.psm_fraction;
    if stays_clm {
        return clm(None);
    }
    if cfg.tokens.occurs_in(&doc.content) {
        return clm(Some(ClmFallback::TokenCollision));
    }
    let Ok((prefix, middle, suffix)) = split_document(&doc.content, cfg.min_doc_chars, rng) else {
        return clm(Some(ClmFallback::TooShort));
    };
    let mode = if psm { FimMode::Psm } else { FimMode::Spm };
    let serialized = serialize(mode, &prefix, &middle, &suffix, &cfg.tokens, cfg.spm_layout);
    BuiltSample {
        sample: FimSample {
            doc_id: doc.id.clone(),
            mode,
            prefix,
            middle,
            suffix,
            serialized,
        },
        fallback: None,
    }
}

/// Builds a sample with the per-document stream for `(seed, doc.id)`, so the
/// outcome does not depend on stream order.
pub fn build_sample(doc: &Document, cfg: &FimConfig, seed: u64) -> BuiltSample {
    build_sample_with(doc, cfg, &mut doc_rng(seed, "fim", &doc.id))
}

/// Output record of the FIM stage: the document plus its sample fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FimRecord {
    #[serde(flatten)]
    pub doc: Document,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<FimMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serialized: Option<String>,
}

impl FimRecord {
    pub fn plain(doc: Document) -> Self {
        FimRecord {
            doc,
            mode: None,
            serialized: None,
        }
    }

    /// Text a trainer would consume.
    pub fn training_text(&self) -> &str {
        self.serialized.as_deref().unwrap_or(&self.doc.content)
    }
}

impl Record for FimRecord {
    fn record_id(&self) -> &str {
        &self.doc.id
    }

    fn check(&self) -> std::result::Result<(), String> {
        self.doc.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks() -> FimTokens {
        FimTokens::default()
    }

    #[test]
    fn fixed_cut_splits() {
        assert_eq!(
            split_at_chars("abcdef", 2, 4),
            ("ab".into(), "cd".into(), "ef".into())
        );
        assert_eq!(
            split_at_chars("abcdef", 0, 6),
            ("".into(), "abcdef".into(), "".into())
        );
        assert_eq!(
            split_at_chars("añbc", 1, 2),
            ("a".into(), "ñ".into(), "bc".into())
        );
    }

    #[test]
    fn random_splits_rejoin_and_have_nonempty_middle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 10..200 {
            let text: String = (0..n).map(|i| char::from(b'a' + (i % 26) as u8)).collect();
            let (p, m, s) = split_document(&text, 10, &mut rng).unwrap();
            assert_eq!(format!("{p}{m}{s}"), text);
            assert!(!m.is_empty());
        }
        assert!(matches!(
            split_document("short", 10, &mut rng),
            Err(Error::FimTooShort { len: 5, min: 10 })
        ));
    }

    #[test]
    fn serialization_formats() {
        let l = SpmLayout::PrefixSuffixHeader;
        assert_eq!(
            serialize(FimMode::Psm, "ab", "cd", "ef", &toks(), l),
            "<fim_prefix>ab<fim_suffix>ef<fim_middle>cd"
        );
        assert_eq!(
            serialize(FimMode::Spm, "ab", "cd", "ef", &toks(), l),
            "<fim_prefix><fim_suffix>ef<fim_middle>abcd"
        );
        assert_eq!(
            serialize(
                FimMode::Spm,
                "ab",
                "cd",
                "ef",
                &toks(),
                SpmLayout::Reordered
            ),
            "<fim_suffix>ef<fim_prefix>ab<fim_middle>cd"
        );
        assert!(serialize(FimMode::Psm, "ab", "", "ef", &toks(), l).ends_with("<fim_middle>"));
    }

    #[test]
    fn parse_inverts_serialize() {
        let psm = serialize(
            FimMode::Psm,
            "ab",
            "cd",
            "ef",
            &toks(),
            SpmLayout::default(),
        );
        let p = parse_fim(&psm, &toks()).unwrap();
        assert_eq!(
            (
                p.mode,
                p.prefix.as_str(),
                p.middle.as_str(),
                p.suffix.as_str()
            ),
            (FimMode::Psm, "ab", "cd", "ef")
        );
        let spm = serialize(
            FimMode::Spm,
            "ab",
            "cd",
            "ef",
            &toks(),
            SpmLayout::Reordered,
        );
        let p = parse_fim(&spm, &toks()).unwrap();
        assert_eq!(
            (
                p.mode,
                p.prefix.as_str(),
                p.middle.as_str(),
                p.suffix.as_str()
            ),
            (FimMode::Spm, "ab", "cd", "ef")
        );
        let spm = serialize(
            FimMode::Spm,
            "ab",
            "cd",
            "ef",
            &toks(),
            SpmLayout::PrefixSuffixHeader,
        );
        let lossy = parse_fim(&spm, &toks()).unwrap();
        assert_eq!(
            (lossy.mode, lossy.prefix.as_str(), lossy.middle.as_str()),
            (FimMode::Spm, "", "abcd")
        );
        let p = parse_spm_header(&spm, &toks(), 2).unwrap();
        assert_eq!(
            (p.prefix.as_str(), p.middle.as_str(), p.suffix.as_str()),
            ("ab", "cd", "ef")
        );

        let empty_prefix = serialize(FimMode::Psm, "", "cd", "ef", &toks(), SpmLayout::Reordered);
        assert_eq!(
            parse_fim(&empty_prefix, &toks()).unwrap().mode,
            FimMode::Spm
        );
        assert_eq!(
            parse_fim_in(&empty_prefix, &toks(), SpmLayout::Reordered)
                .unwrap()
                .mode,
            FimMode::Psm
        );
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(
            parse_fim("<fim_prefix>ab<fim_suffix>ef", &toks()),
            Err(Error::FimMalformed(_))
        ));
        let collision = serialize(
            FimMode::Psm,
            "x<fim_prefix>",
            "m",
            "s",
            &toks(),
            SpmLayout::default(),
        );
        assert!(matches!(
            parse_fim(&collision, &toks()),
            Err(Error::FimMalformed(_))
        ));
        assert!(parse_fim("<fim_middle>a<fim_suffix>b<fim_prefix>", &toks()).is_err());
    }

    #[test]
    fn token_validation() {
        assert!(toks().validate().is_ok());
        let bad = FimTokens {
            prefix: "<p>".into(),
            suffix: "<p><s>".into(),
            middle: "<m>".into(),
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn degenerate_alphas() {
        let doc = Document::new("d", "a.py", "def f():\n    return 1\n");
        let all_clm = FimConfig {
            alpha: 1.0,
            ..FimConfig::default()
        };
        let all_psm = FimConfig {
            alpha: 0.0,
            psm_fraction: 1.0,
            ..FimConfig::default()
        };
        for seed in 0..50 {
            assert_eq!(build_sample(&doc, &all_clm, seed).sample.mode, FimMode::Clm);
            let s = build_sample(&doc, &all_psm, seed).sample;
            assert_eq!(s.mode, FimMode::Psm);
            assert_eq!(format!("{}{}{}", s.prefix, s.middle, s.suffix), doc.content);
        }
    }

    #[test]
    fn fallbacks_to_clm() {
        let cfg = FimConfig {
            alpha: 0.0,
            ..FimConfig::default()
        };
        let short = build_sample(&Document::new("s", "a.py", "tiny"), &cfg, 1);
        assert_eq!(short.sample.mode, FimMode::Clm);
        assert_eq!(short.fallback, Some(ClmFallback::TooShort));
        let clash = build_sample(
            &Document::new("c", "a.py", "has <fim_middle> inside it"),
            &cfg,
            1,
        );
        assert_eq!(clash.fallback, Some(ClmFallback::TokenCollision));
        assert_eq!(clash.sample.serialized, "has <fim_middle> inside it");
    }

    #[test]
    fn fim_record_reads_plain_documents() {
        let doc = Document::new("d", "a.py", "x");
        let line = serde_json::to_string(&doc).unwrap();
        let rec: FimRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(rec, FimRecord::plain(doc));
        assert_eq!(serde_json::to_string(&rec).unwrap(), line);
    }
}

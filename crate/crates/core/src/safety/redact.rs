use std::net::{Ipv4Addr, Ipv6Addr};

use rand::Rng;

use super::pii::{PiiSpan, PiiTokens};
use crate::error::{Error, Result};

/// IPv4 documentation networks (TEST-NET-1/2/3).
pub const DOC_V4_NETS: [[u8; 3]; 3] = [[192, 0, 2], [198, 51, 100], [203, 0, 113]];

pub fn is_documentation_ip(addr: &str) -> bool {
    if let Ok(v4) = addr.parse::<Ipv4Addr>() {
        let o = v4.octets();
        return DOC_V4_NETS.iter().any(|n| n[..] == o[..3]);
    }
    if let Ok(v6) = addr.parse::<Ipv6Addr>() {
        let s = v6.segments();
        return s[0] == 0x2001 && s[1] == 0x0db8;
    }
    false
}

/// A random address from the documentation range of the same family.
pub fn synthetic_ip(original: &str, rng: &mut impl Rng) -> String {
    if original.contains(':') {
        let mut seg = [0u16; 8];
        seg[0] = 0x2001;
        seg[1] = 0x0db8;
        for s in &mut seg[2..] {
            *s = rng.random();
        }
        Ipv6Addr::from(seg).to_string()
    } else {
        let net = DOC_V4_NETS[rng.random_range(0..DOC_V4_NETS.len())];
        let host: u8 = rng.random_range(1..=254);
        Ipv4Addr::new(net[0], net[1], net[2], host).to_string()
    }
}

/// Replaces every span right to left. Spans must be in range, non-overlapping
/// and match the content they claim to cover.
pub fn redact_pii(
    content: &str,
    spans: &[PiiSpan],
    tokens: &PiiTokens,
    rng: &mut impl Rng,
) -> Result<String> {
    if spans.is_empty() {
        return Ok(content.to_string());
    }
    let mut order: Vec<&PiiSpan> = spans.iter().collect();
    order.sort_by_key(|s| (s.start, s.end));
    for w in order.windows(2) {
        if w[0].end > w[1].start {
            return Err(Error::SpanConflict(format!(
                "spans [{}, {}) and [{}, {}) overlap",
                w[0].start, w[0].end, w[1].start, w[1].end
            )));
        }
    }

    // Char offset -> byte offset for every span boundary, in one pass.
    let mut bounds: Vec<usize> = order.iter().flat_map(|s| [s.start, s.end]).collect();
    bounds.sort_unstable();
    bounds.dedup();
    let mut byte_of = std::collections::HashMap::with_capacity(bounds.len());
    let mut it = content
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(content.len()));
    let mut char_pos = 0usize;
    let mut next_byte = it.next();
    for &b in &bounds {
        while char_pos < b {
            next_byte = it.next();
            char_pos += 1;
        }
        match next_byte {
            Some(byte) => {
                byte_of.insert(b, byte);
            }
            None => {
                return Err(Error::SpanConflict(format!(
                    "offset {b} beyond content length"
                )));
            }
        }
    }

    let mut resolved = Vec::with_capacity(order.len());
    for s in &order {
        if s.start >= s.end {
            return Err(Error::SpanConflict(format!("empty span at {}", s.start)));
        }
        let (bs, be) = (byte_of[&s.start], byte_of[&s.end]);
        if content[bs..be] != s.matched_text {
            return Err(Error::SpanConflict(format!(
                "span [{}, {}) does not cover `{}`",
                s.start, s.end, s.matched_text
            )));
        }
        resolved.push((s.kind, bs, be));
    }

    // Draw synthetic addresses left to right so results do not depend on
    // replacement order.
    let replacements: Vec<String> = resolved
        .iter()
        .map(|&(kind, bs, be)| match tokens.for_kind(kind) {
            Some(tok) => tok.to_string(),
            None => synthetic_ip(&content[bs..be], rng),
        })
        .collect();

    let mut out = content.to_string();
    for ((_, bs, be), rep) in resolved.iter().zip(&replacements).rev() {
        out.replace_range(*bs..*be, rep);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::SourceKind;
    use crate::safety::pii::{detect_pii, PiiKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    fn redact(text: &str) -> String {
        let spans = detect_pii(text, SourceKind::Code);
        redact_pii(text, &spans, &PiiTokens::default(), &mut rng()).unwrap()
    }

    #[test]
    fn no_spans_is_identity() {
        let t = "nothing to see";
        assert_eq!(
            redact_pii(t, &[], &PiiTokens::default(), &mut rng()).unwrap(),
            t
        );
    }

    #[test]
    fn email_replaced_in_place() {
        assert_eq!(redact("mail é a.b@example.com now"), "mail é <EMAIL> now");
    }

    #[test]
    fn ips_become_documentation_addresses() {
        let out = redact("peer 10.0.0.1");
        let addr = out.strip_prefix("peer ").unwrap();
        assert!(is_documentation_ip(addr), "{addr}");
        let out = redact("peer fe80::1ff:fe23:4567:890a");
        let addr = out.strip_prefix("peer ").unwrap();
        assert!(addr.contains(':') && is_documentation_ip(addr), "{addr}");
    }

    #[test]
    fn overlapping_or_bogus_spans_conflict() {
        let span = |s, e, t: &str| PiiSpan {
            kind: PiiKind::Email,
            start: s,
            end: e,
            matched_text: t.into(),
        };
        let tok = PiiTokens::default();
        let text = "abcdef";
        assert!(matches!(
            redact_pii(
                text,
                &[span(0, 3, "abc"), span(2, 4, "cd")],
                &tok,
                &mut rng()
            ),
            Err(Error::SpanConflict(_))
        ));
        assert!(redact_pii(text, &[span(4, 9, "ef")], &tok, &mut rng()).is_err());
        assert!(redact_pii(text, &[span(0, 2, "xx")], &tok, &mut rng()).is_err());
        assert_eq!(
            redact_pii(
                text,
                &[span(4, 6, "ef"), span(0, 2, "ab")],
                &tok,
                &mut rng()
            )
            .unwrap(),
            "<EMAIL>cd<EMAIL>"
        );
    }

    #[test]
    fn redaction_is_idempotent_for_token_kinds() {
        let text = "password = \"hunter2\"\nmail a@b.org\nkey AKIAZ7Q2M4X9K3LW8PJD";
        let once = redact(text);
        assert_eq!(redact(&once), once);
        assert!(detect_pii(&once, SourceKind::Code).is_empty());
    }
}

use std::collections::HashSet;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus_io::{hex, Document};

pub fn content_digest_bytes(content: &str) -> [u8; 32] {
    Sha256::digest(content.as_bytes()).into()
}

/// Lowercase hex SHA-256 of the UTF-8 content.
pub fn content_digest(content: &str) -> String {
    hex(&content_digest_bytes(content))
}

/// First-wins exact deduplication over a stream of content digests.
#[derive(Debug, Default)]
pub struct ExactDeduper {
    seen: HashSet<[u8; 32]>,
}

impl ExactDeduper {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true the first time a digest is offered.
    pub fn admit(&mut self, digest: [u8; 32]) -> bool {
        self.seen.insert(digest)
    }
}

/// Keeps the first document per content digest, preserving order. Returns
/// the kept documents and the number dropped.
pub fn exact_dedup(docs: Vec<Document>) -> (Vec<Document>, usize) {
    let digests: Vec<[u8; 32]> = docs
        .par_iter()
        .map(|d| content_digest_bytes(&d.content))
        .collect();
    let mut dedup = ExactDeduper::new();
    let before = docs.len();
    let kept: Vec<Document> = docs
        .into_iter()
        .zip(digests)
        .filter_map(|(d, h)| dedup.admit(h).then_some(d))
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_test_vectors() {
        assert_eq!(
            content_digest(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            content_digest("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(content_digest("x"), content_digest("x"));
    }

    #[test]
    fn first_occurrence_wins() {
        let docs = vec![
            Document::new("a", "a.py", "same"),
            Document::new("a2", "b.py", "same"),
            Document::new("b", "c.py", "other"),
        ];
        let (kept, dropped) = exact_dedup(docs);
        assert_eq!(dropped, 1);
        let ids: Vec<_> = kept.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        let (again, dropped) = exact_dedup(kept.clone());
        assert_eq!(dropped, 0);
        assert_eq!(again, kept);
    }
}

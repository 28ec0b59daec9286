//! Exact and near-duplicate removal.
//!
//! Near duplicates are found by shingling each document, computing MinHash
//! signatures, bucketing signature bands, and verifying every bucketed pair
//! with exact Jaccard similarity. Verified pairs are merged single-linkage
//! and one member per cluster survives.

mod exact;
mod lsh;
mod minhash;
mod union_find;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use exact::{content_digest, content_digest_bytes, exact_dedup, ExactDeduper};
pub use lsh::{candidate_pairs, candidate_probability, implied_threshold, lsh_band_keys, BandKey};
pub use minhash::{
    hash_shingle, jaccard, jaccard_sorted, shingles, MinHashSignature, MinHasher, ShingleSet,
    MERSENNE_61,
};
pub use union_find::UnionFind;

use crate::corpus_io::Document;
use crate::error::{Error, Result};

/// How documents are partitioned before near-duplicate search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    #[default]
    Global,
    Language,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupConfig {
    pub shingle_k: usize,
    pub num_permutations: usize,
    pub bands: usize,
    pub rows: usize,
    pub jaccard_threshold: f64,
    pub perm_seed: u64,
    pub group_by: GroupBy,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            shingle_k: 5,
            num_permutations: 256,
            bands: 32,
            rows: 8,
            jaccard_threshold: 0.7,
            perm_seed: 0x2545_f491_4f6c_dd1d,
            group_by: GroupBy::Global,
        }
    }
}

impl DedupConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shingle_k == 0 || self.num_permutations == 0 {
            return Err(Error::Config(
                "shingle_k and num_permutations must be positive".into(),
            ));
        }
        if self.bands * self.rows != self.num_permutations {
            return Err(Error::LshGeometry {
                bands: self.bands,
                rows: self.rows,
                len: self.num_permutations,
            });
        }
        if !(self.jaccard_threshold > 0.0 && self.jaccard_threshold <= 1.0) {
            return Err(Error::Config("jaccard_threshold must lie in (0,1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupCluster {
    pub representative_id: String,
    pub duplicate_ids: Vec<String>,
}

impl DedupCluster {
    pub fn size(&self) -> usize {
        self.duplicate_ids.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifiedPair {
    pub left: usize,
    pub right: usize,
    pub jaccard: f64,
}

fn group_ids(docs: &[Document], group_by: GroupBy) -> Vec<u32> {
    match group_by {
        GroupBy::Global => vec![0; docs.len()],
        GroupBy::Language => {
            let mut ids: BTreeMap<String, u32> = BTreeMap::new();
            docs.iter()
                .map(|d| {
                    let key = match d.language {
                        Some(l) => l.name().to_string(),
                        None => format!("kind:{}", d.source_kind),
                    };
                    let next = ids.len() as u32;
                    *ids.entry(key).or_insert(next)
                })
                .collect()
        }
    }
}

/// Candidate pairs that pass exact Jaccard verification, in ascending
/// `(left, right)` order.
pub fn verified_pairs(docs: &[Document], cfg: &DedupConfig) -> Result<Vec<VerifiedPair>> {
    cfg.validate()?;
    let sets: Vec<ShingleSet> = docs
        .par_iter()
        .map(|d| shingles(&d.id, &d.content, cfg.shingle_k))
        .collect();
    let hasher = MinHasher::new(cfg.num_permutations, cfg.perm_seed);
    let keys: Vec<Vec<BandKey>> = sets
        .par_iter()
        .map(|s| lsh_band_keys(&hasher.signature(s), cfg.bands, cfg.rows))
        .collect::<Result<_>>()?;
    let groups = group_ids(docs, cfg.group_by);
    let pairs = candidate_pairs(&keys, &groups);
    Ok(pairs
        .par_iter()
        .filter_map(|&(i, j)| {
            let (i, j) = (i as usize, j as usize);
            let s = jaccard(&sets[i], &sets[j]);
            (s >= cfg.jaccard_threshold).then_some(VerifiedPair {
                left: i,
                right: j,
                jaccard: s,
            })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyOutcome {
    pub kept: Vec<Document>,
    pub clusters: Vec<DedupCluster>,
}

impl FuzzyOutcome {
    pub fn dropped(&self) -> usize {
        self.clusters.iter().map(|c| c.duplicate_ids.len()).sum()
    }
}

/// Near-duplicate removal. Within each cluster the member with the smallest
/// (character length, id) is kept and annotated with `dedup_cluster`; kept
/// documents stay in input order.
pub fn fuzzy_dedup(docs: Vec<Document>, cfg: &DedupConfig) -> Result<FuzzyOutcome> {
    let pairs = verified_pairs(&docs, cfg)?;
    let mut uf = UnionFind::new(docs.len());
    for p in &pairs {
        uf.union(p.left, p.right);
    }
    let lengths: Vec<usize> = docs.par_iter().map(Document::char_len).collect();
    let mut keep = vec![true; docs.len()];
    let mut rep_of = vec![None; docs.len()];
    let mut clusters = Vec::new();
    for members in uf.components().into_iter().filter(|m| m.len() > 1) {
        let rep = *members
            .iter()
            .min_by(|&&a, &&b| (lengths[a], &docs[a].id).cmp(&(lengths[b], &docs[b].id)))
            .expect("non-empty cluster");
        let mut duplicate_ids = Vec::with_capacity(members.len() - 1);
        for &m in &members {
            if m != rep {
                keep[m] = false;
                duplicate_ids.push(docs[m].id.clone());
            }
        }
        rep_of[rep] = Some(clusters.len());
        clusters.push((
            rep,
            DedupCluster {
                representative_id: docs[rep].id.clone(),
                duplicate_ids,
            },
        ));
    }
    clusters.sort_by_key(|(rep, _)| *rep);
    let clusters: Vec<DedupCluster> = clusters.into_iter().map(|(_, c)| c).collect();
    let kept = docs
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(i, mut d)| {
            if rep_of[i].is_some() {
                d.annotations.insert("dedup_cluster".into(), d.id.clone());
            }
            d
        })
        .collect();
    Ok(FuzzyOutcome { kept, clusters })
}

/// Pairs of documents that still share a band key and verify above the
/// threshold. Empty for any output of [`fuzzy_dedup`].
pub fn residual_duplicate_pairs(
    docs: &[Document],
    cfg: &DedupConfig,
) -> Result<Vec<(String, String, f64)>> {
    Ok(verified_pairs(docs, cfg)?
        .into_iter()
        .map(|p| (docs[p.left].id.clone(), docs[p.right].id.clone(), p.jaccard))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::LanguageTag;

    fn words(seed: u64, n: usize) -> Vec<String> {
        (0..n as u64)
            .map(|i| format!("w{}", (seed * 1_000_003 + i * 7919) % 1_000_000))
            .collect()
    }

    #[test]
    fn disjoint_documents_are_kept() {
        let docs = vec![
            Document::new("a", "a.py", words(1, 50).join(" ")),
            Document::new("b", "b.py", words(2, 50).join(" ")),
        ];
        let out = fuzzy_dedup(docs.clone(), &DedupConfig::default()).unwrap();
        assert_eq!(out.kept, docs);
        assert!(out.clusters.is_empty());
    }

    #[test]
    fn edited_copy_is_clustered_with_shorter_representative() {
        let base = words(3, 100);
        let mut edited = base.clone();
        edited[50] = "changed".into();
        let truth = jaccard(
            &shingles("", &base.join(" "), 5),
            &shingles("", &edited.join(" "), 5),
        );
        // One substituted token breaks 5 of 96 windows: 91 / 101.
        assert!((truth - 91.0 / 101.0).abs() < 1e-12);
        let docs = vec![
            Document::new("long", "a.py", format!("{} extra", base.join(" "))),
            Document::new("short", "b.py", edited.join(" ")),
        ];
        let out = fuzzy_dedup(docs, &DedupConfig::default()).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id, "short");
        assert_eq!(out.kept[0].annotations["dedup_cluster"], "short");
        assert_eq!(
            out.clusters,
            vec![DedupCluster {
                representative_id: "short".into(),
                duplicate_ids: vec!["long".into()],
            }]
        );
    }

    #[test]
    fn exact_copies_cluster_and_second_pass_is_noop() {
        let text = words(4, 40).join(" ");
        let docs: Vec<_> = ["c", "a", "b"]
            .iter()
            .map(|id| Document::new(*id, "x.py", text.clone()))
            .collect();
        let cfg = DedupConfig::default();
        let out = fuzzy_dedup(docs, &cfg).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id, "a");
        assert_eq!(out.clusters[0].duplicate_ids, vec!["c", "b"]);
        let again = fuzzy_dedup(out.kept.clone(), &cfg).unwrap();
        assert_eq!(again.dropped(), 0);
        assert!(residual_duplicate_pairs(&out.kept, &cfg)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn language_grouping_separates_languages() {
        let text = words(5, 40).join(" ");
        let py = LanguageTag::new("Python").unwrap();
        let rs = LanguageTag::new("Rust").unwrap();
        let docs = vec![
            Document::new("a", "a.py", text.clone()).with_language(py),
            Document::new("b", "b.rs", text).with_language(rs),
        ];
        let cfg = DedupConfig {
            group_by: GroupBy::Language,
            ..DedupConfig::default()
        };
        assert_eq!(fuzzy_dedup(docs.clone(), &cfg).unwrap().dropped(), 0);
        assert_eq!(
            fuzzy_dedup(docs, &DedupConfig::default())
                .unwrap()
                .dropped(),
            1
        );
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        let cfg = DedupConfig {
            bands: 30,
            ..DedupConfig::default()
        };
        assert!(fuzzy_dedup(vec![], &cfg).is_err());
    }
}

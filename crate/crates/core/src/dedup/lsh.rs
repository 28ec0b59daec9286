use std::collections::HashMap;

use xxhash_rust::xxh3::xxh3_64;

use super::minhash::MinHashSignature;
use crate::error::{Error, Result};

/// Bucket key of one band: (band index, digest of that band's rows).
pub type BandKey = (u32, u64);

pub fn lsh_band_keys(sig: &MinHashSignature, bands: usize, rows: usize) -> Result<Vec<BandKey>> {
    if bands == 0 || rows == 0 || bands * rows != sig.values.len() {
        return Err(Error::LshGeometry {
            bands,
            rows,
            len: sig.values.len(),
        });
    }
    let mut bytes = Vec::with_capacity(rows * 8);
    Ok(sig
        .values
        .chunks_exact(rows)
        .enumerate()
        .map(|(j, band)| {
            bytes.clear();
            for v in band {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            (j as u32, xxh3_64(&bytes))
        })
        .collect())
}

/// Probability that two documents at Jaccard `s` share at least one band.
pub fn candidate_probability(s: f64, bands: usize, rows: usize) -> f64 {
    1.0 - (1.0 - s.powi(rows as i32)).powi(bands as i32)
}

/// Similarity where the banding S-curve is steepest, `(1/b)^(1/r)`.
pub fn implied_threshold(bands: usize, rows: usize) -> f64 {
    (1.0 / bands as f64).powf(1.0 / rows as f64)
}

/// All index pairs `(i, j)`, `i < j`, sharing at least one key within the
/// same group. Sorted and without repeats, independent of thread count.
pub fn candidate_pairs(keys: &[Vec<BandKey>], groups: &[u32]) -> Vec<(u32, u32)> {
    let mut buckets: HashMap<(u32, BandKey), Vec<u32>> = HashMap::new();
    for (i, doc_keys) in keys.iter().enumerate() {
        for k in doc_keys {
            buckets.entry((groups[i], *k)).or_default().push(i as u32);
        }
    }
    let mut pairs = Vec::new();
    for members in buckets.values() {
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(values: Vec<u64>) -> MinHashSignature {
        MinHashSignature {
            doc_id: "x".into(),
            values,
        }
    }

    #[test]
    fn identical_signatures_collide_everywhere() {
        let a = sig((0..256).collect());
        assert_eq!(
            lsh_band_keys(&a, 32, 8).unwrap(),
            lsh_band_keys(&a.clone(), 32, 8).unwrap()
        );
    }

    #[test]
    fn fully_different_signatures_never_collide() {
        let a = lsh_band_keys(&sig((0..256).collect()), 32, 8).unwrap();
        let b = lsh_band_keys(&sig((1000..1256).collect()), 32, 8).unwrap();
        assert!(a.iter().all(|k| !b.contains(k)));
    }

    #[test]
    fn first_band_agreement_shares_only_band_zero() {
        let a: Vec<u64> = (0..256).collect();
        let mut b: Vec<u64> = (5000..5256).collect();
        b[..8].copy_from_slice(&a[..8]);
        let ka = lsh_band_keys(&sig(a), 32, 8).unwrap();
        let kb = lsh_band_keys(&sig(b), 32, 8).unwrap();
        let shared: Vec<_> = ka.iter().filter(|k| kb.contains(k)).collect();
        assert_eq!(shared.len(), 1);
        assert_eq!(shared[0].0, 0);
    }

    #[test]
    fn geometry_mismatch_is_a_config_error() {
        assert!(matches!(
            lsh_band_keys(&sig(vec![0; 100]), 32, 8),
            Err(Error::LshGeometry { .. })
        ));
    }

    #[test]
    fn default_geometry_curve() {
        assert!((implied_threshold(32, 8) - 0.6484).abs() < 1e-3);
        assert!((candidate_probability(0.7, 32, 8) - 0.8504).abs() < 1e-3);
        assert!(candidate_probability(0.8, 32, 8) > 0.99);
    }

    #[test]
    fn candidates_respect_groups() {
        let k = vec![vec![(0, 1)], vec![(0, 1)], vec![(0, 1)]];
        assert_eq!(
            candidate_pairs(&k, &[0, 0, 0]),
            vec![(0, 1), (0, 2), (1, 2)]
        );
        assert_eq!(candidate_pairs(&k, &[0, 1, 0]), vec![(0, 2)]);
    }
}

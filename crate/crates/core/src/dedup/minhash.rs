use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

/// Mersenne prime 2^61 - 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Set of hashed k-token shingles, stored sorted and without repeats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShingleSet {
    pub doc_id: String,
    pub shingles: Vec<u64>,
}

impl ShingleSet {
    pub fn from_hashes(doc_id: impl Into<String>, mut hashes: Vec<u64>) -> Self {
        hashes.sort_unstable();
        hashes.dedup();
        ShingleSet {
            doc_id: doc_id.into(),
            shingles: hashes,
        }
    }

    pub fn len(&self) -> usize {
        self.shingles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shingles.is_empty()
    }
}

pub fn hash_shingle(text: &str) -> u64 {
    xxh3_64(text.as_bytes())
}

/// Hashes of every window of `k` whitespace tokens joined by single spaces.
/// Documents shorter than `k` tokens yield one shingle of all tokens.
pub fn shingles(doc_id: &str, content: &str, k: usize) -> ShingleSet {
    assert!(k >= 1, "shingle size must be positive");
    let tokens: Vec<&str> = content.split_whitespace().collect();
    if tokens.is_empty() {
        return ShingleSet::from_hashes(doc_id, Vec::new());
    }
    let mut buf = String::new();
    let mut join = |window: &[&str]| {
        buf.clear();
        for (i, t) in window.iter().enumerate() {
            if i > 0 {
                buf.push(' ');
            }
            buf.push_str(t);
        }
        hash_shingle(&buf)
    };
    let hashes = if tokens.len() < k {
        vec![join(&tokens)]
    } else {
        tokens.windows(k).map(&mut join).collect()
    };
    ShingleSet::from_hashes(doc_id, hashes)
}

/// |a ∩ b| / |a ∪ b|, with two empty sets counted as identical.
pub fn jaccard(a: &ShingleSet, b: &ShingleSet) -> f64 {
    jaccard_sorted(&a.shingles, &b.shingles)
}

pub fn jaccard_sorted(a: &[u64], b: &[u64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub doc_id: String,
    pub values: Vec<u64>,
}

impl MinHashSignature {
    /// Fraction of positions where two signatures agree.
    pub fn match_fraction(&self, other: &MinHashSignature) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        let same = self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.values.len() as f64
    }
}

#[inline]
fn mod_mersenne(y: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    let mut r = (y & p) + (y >> 61);
    r = (r & p) + (r >> 61);
    if r >= p {
        r -= p;
    }
    r as u64
}

/// Family of affine hashes `h_i(x) = (a_i * x + b_i) mod (2^61 - 1)` with
/// coefficients drawn from a seeded stream.
#[derive(Debug, Clone)]
pub struct MinHasher {
    a: Vec<u64>,
    b: Vec<u64>,
}

impl MinHasher {
    pub fn new(num_permutations: usize, seed: u64) -> Self {
        assert!(num_permutations >= 1, "need at least one permutation");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Vec::with_capacity(num_permutations);
        let mut b = Vec::with_capacity(num_permutations);
        for _ in 0..num_permutations {
            a.push(rng.random_range(1..MERSENNE_61));
            b.push(rng.random_range(0..MERSENNE_61));
        }
        MinHasher { a, b }
    }

    pub fn num_permutations(&self) -> usize {
        self.a.len()
    }

    #[inline]
    pub fn hash(&self, i: usize, x: u64) -> u64 {
        let xm = mod_mersenne(x as u128) as u128;
        mod_mersenne(self.a[i] as u128 * xm + self.b[i] as u128)
    }

    pub fn signature(&self, set: &ShingleSet) -> MinHashSignature {
        let mut values = vec![u64::MAX; self.a.len()];
        for &x in &set.shingles {
            let xm = mod_mersenne(x as u128) as u128;
            for ((v, &a), &b) in values.iter_mut().zip(&self.a).zip(&self.b) {
                let h = mod_mersenne(a as u128 * xm + b as u128);
                if h < *v {
                    *v = h;
                }
            }
        }
        MinHashSignature {
            doc_id: set.doc_id.clone(),
            values,
        }
    }
}

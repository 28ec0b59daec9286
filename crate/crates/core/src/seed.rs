//! Per-document random streams.
//!
//! Every randomized decision is drawn from a ChaCha stream keyed by
//! (pipeline seed, stage tag, document id), so a document's outcome does not
//! depend on its position in the stream or on the worker that handles it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn doc_rng(seed: u64, stage: &str, doc_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((stage.len() as u64).to_le_bytes());
    h.update(stage.as_bytes());
    h.update(doc_id.as_bytes());
    let out: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(out)
}

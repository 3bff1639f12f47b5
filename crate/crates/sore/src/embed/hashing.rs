//! Deterministic feature-hashing embedder.
//!
//! Character n-grams (n = 3..5) of the lowercased text are hashed into `dim`
//! signed buckets with sublinear `ln(1 + count)` weights, then L2-normalized.
//! Purely lexical, language-agnostic, and stable across platforms, which is
//! what the offline pipeline and the test suite need.

use std::collections::BTreeMap;

use super::{EmbedError, EmbeddingVector};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a_seeded(seed: u64, chars: &[char]) -> u64 {
    let mut h = FNV_OFFSET ^ seed;
    let mut buf = [0u8; 4];
    for &c in chars {
        for &b in c.encode_utf8(&mut buf).as_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Raw signed-bucket accumulation before normalization. Shared by
/// [`hash_embed`] and the batch provider so both produce identical bits.
pub(crate) fn hash_accumulate(text: &str, dim: usize, seed: u64) -> Result<Vec<f32>, EmbedError> {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    if chars.len() < 3 {
        return Err(EmbedError::TextTooShort { chars: chars.len() });
    }
    // Count per distinct n-gram, keyed by hash. BTreeMap keeps the
    // accumulation order deterministic, which keeps the float sums bit-stable.
    let mut counts: BTreeMap<u64, u32> = BTreeMap::new();
    for n in 3..=5usize {
        if chars.len() < n {
            break;
        }
        for window in chars.windows(n) {
            *counts.entry(fnv1a_seeded(seed, window)).or_insert(0) += 1;
        }
    }
    let mut values = vec![0.0f32; dim];
    for (hash, count) in counts {
        let idx = (hash % dim as u64) as usize;
        let sign = if hash >> 63 == 1 { -1.0f32 } else { 1.0f32 };
        values[idx] += sign * ((1.0 + f64::from(count)).ln() as f32);
    }
    Ok(values)
}

/// Embed one text deterministically. Same text, dim, and seed always produce
/// the same vector; near-duplicate texts land close in cosine similarity.
pub fn hash_embed(text: &str, dim: usize, seed: u64) -> Result<EmbeddingVector, EmbedError> {
    if dim < 16 {
        return Err(EmbedError::InvalidConfig("hash_embed needs dim >= 16".into()));
    }
    EmbeddingVector::unit(hash_accumulate(text, dim, seed)?)
}

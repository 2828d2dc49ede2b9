//! Deterministic pseudo-embeddings from seeded character-trigram hashing.
//!
//! Each trigram of the normalized text is hashed into one of `dim` signed
//! buckets; the resulting count vector is L2-normalized. Similar strings
//! share most trigrams and land close in cosine; unrelated strings
//! decorrelate through the sign bit. Purely a function of (text, seed, dim),
//! stable across releases.

use crate::Embedding;
use skein_core::rng::fnv1a64;

/// Lowercases, maps punctuation to spaces, collapses runs of whitespace.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_space = true;
    for ch in text.chars() {
        let ch = if ch.is_alphanumeric() {
            ch.to_ascii_lowercase()
        } else {
            ' '
        };
        if ch == ' ' {
            if !last_space {
                out.push(' ');
            }
            last_space = true;
        } else {
            out.push(ch);
            last_space = false;
        }
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Builds the pseudo-embedding. Assumes non-empty input; the gateway
/// rejects empty text before calling.
pub fn pseudo_embedding(text: &str, seed: u64, dim: usize) -> Embedding {
    let normalized = normalize(text);
    let chars: Vec<char> = normalized.chars().collect();
    let mut acc = vec![0.0f64; dim];

    let mut bump = |gram: &[char]| {
        let mut bytes = seed.to_le_bytes().to_vec();
        let gram_str: String = gram.iter().collect();
        bytes.extend_from_slice(gram_str.as_bytes());
        let h = fnv1a64(&bytes);
        let bucket = ((h >> 1) % dim as u64) as usize;
        let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    };

    if chars.len() < 3 {
        bump(&chars);
    } else {
        for window in chars.windows(3) {
            bump(window);
        }
    }

    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        // Signed counts can cancel; fall back to a single deterministic spike.
        let h = fnv1a64(normalized.as_bytes());
        acc[(h % dim as u64) as usize] = 1.0;
        return Embedding::new(acc.into_iter().map(|v| v as f32).collect());
    }
    Embedding::new(acc.into_iter().map(|v| (v / norm) as f32).collect())
}

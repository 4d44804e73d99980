//! Deterministic token embeddings for the coherence scorer.
//!
//! Each token is hashed (FNV-1a, xor a seed) and the hash drives a splitmix64
//! stream that fills the vector with components uniform in [-1, 1). Texts are
//! mean-pooled over their tokens. No model files, no global state.

use crate::text::embedding_tokens;

pub const DEFAULT_DIMENSION: usize = 64;
pub const DEFAULT_SEED: u64 = 0x5EED_C0DE_7A1C_0001;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Anything that turns text into a fixed-width vector.
pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;

    fn embed_token(&self, token: &str) -> Vec<f64>;

    /// Mean of the token vectors. All zeros when the text has no tokens.
    fn embed_tokens(&self, tokens: &[String]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dimension()];
        if tokens.is_empty() {
            return acc;
        }
        for t in tokens {
            for (a, v) in acc.iter_mut().zip(self.embed_token(t)) {
                *a += v;
            }
        }
        let n = tokens.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        self.embed_tokens(&embedding_tokens(text))
    }
}

/// Seeded-hash random-projection embedder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dimension: usize,
    seed: u64,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION, DEFAULT_SEED)
    }
}

impl HashEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension, seed }
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_token(&self, token: &str) -> Vec<f64> {
        let h = fnv1a(token.as_bytes()) ^ self.seed;
        (0..self.dimension as u64)
            .map(|j| {
                let x = splitmix64(h.wrapping_add((j + 1).wrapping_mul(GOLDEN_GAMMA)));
                (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01B3))
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Cosine similarity; 0 when either vector is all zeros. Clamped to [-1, 1].
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

//! Named random sub-streams.
//!
//! Every stochastic component draws from a [`ChaCha8Rng`] keyed by the run
//! seed, a stream name and an index path, so that no two components share
//! a stream and nothing depends on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Derive an independent generator for `(seed, name, path)`.
pub fn substream(seed: u64, name: &str, path: &[u64]) -> Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((name.len() as u64).to_le_bytes());
    hasher.update(name.as_bytes());
    for p in path {
        hasher.update(p.to_le_bytes());
    }
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// Derive a child seed (for APIs that take a plain `u64`).
pub fn subseed(seed: u64, name: &str, path: &[u64]) -> u64 {
    use rand::RngCore;
    substream(seed, name, path).next_u64()
}

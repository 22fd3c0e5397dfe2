//! Splittable, platform-independent random streams.
//!
//! Every stochastic task in the crate draws from a ChaCha stream derived
//! from `(master seed, path)`, where the path encodes the task's position
//! in the experiment tree (experiment kind, sample size, replication id,
//! ...). Streams for distinct paths are independent, and results are
//! reproducible bit-for-bit regardless of thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a deterministic RNG for a task identified by `path` under `master`.
pub fn derive_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for part in path {
        hasher.update(part.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Derive a 64-bit sub-seed, for APIs that take a seed rather than an RNG.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for part in path {
        hasher.update(part.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

//! Seed derivation. Every stage gets its own ChaCha stream, keyed by a label
//! hashed together with the run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Hash `(seed, label)` into a 64-bit sub-seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label))
}

/// Stream for worker `worker` of a labelled stage.
pub fn worker_stream(seed: u64, label: &str, worker: u64) -> ChaCha8Rng {
    let mut rng = stream(seed, label);
    rng.set_stream(worker);
    rng
}

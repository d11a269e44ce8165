//! Seed derivation. Every random stream is a ChaCha8 generator seeded from a
//! SHA-256 digest, so results do not depend on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StageRng = ChaCha8Rng;

/// First eight bytes of SHA-256 over the length-prefixed parts.
pub fn hash64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

pub fn dialogue_seed(global_seed: u64, dialogue_id: &str) -> u64 {
    hash64(&[&global_seed.to_le_bytes(), dialogue_id.as_bytes()])
}

/// Independent stream for one named stage of one dialogue.
pub fn stage_rng(dialogue_seed: u64, stage: &str) -> StageRng {
    ChaCha8Rng::seed_from_u64(hash64(&[&dialogue_seed.to_le_bytes(), stage.as_bytes()]))
}

pub fn seeded(seed: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(seed)
}

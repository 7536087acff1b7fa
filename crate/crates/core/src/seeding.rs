//! Stable seed derivation. Every stream of randomness in a run is keyed by a
//! SHA-256 digest of its parent seed and a label, so streams never depend on
//! execution order or on how many draws another stream consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn derived_rng(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label, index))
}

/// Seed for one faction's agent in one game.
pub fn agent_seed(game_seed: u64, faction_tag: &str) -> u64 {
    derive_seed(game_seed, faction_tag, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_and_decorrelated() {
        assert_eq!(derive_seed(1, "E", 0), derive_seed(1, "E", 0));
        assert_ne!(agent_seed(1, "E"), agent_seed(1, "N"));
        assert_ne!(derive_seed(1, "bo", 1), derive_seed(1, "bo", 2));
        assert_ne!(derive_seed(1, "ab", 0), derive_seed(1, "a", 0));
    }

    #[test]
    fn pinned_value() {
        // Changing the derivation would silently change every recorded run.
        assert_eq!(agent_seed(7, "E"), 8_435_487_031_400_366_374);
    }
}

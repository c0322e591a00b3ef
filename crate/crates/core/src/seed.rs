//! Fixed derivation of sub-seeds from a master seed.
//!
//! Every random stream in the crate (fold assignment, per-fold forests,
//! per-tree bootstraps, synthetic corpora) is keyed by a path of integers
//! hashed together with the master seed, so results do not depend on the
//! order in which parallel work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FOLDS: u64 = 1;
pub const FOREST: u64 = 2;
pub const SYNTH: u64 = 3;
pub const RANDOM_RANKING: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` along `path`.
pub fn derive(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(parent), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(parent: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(parent, path))
}

//! Deterministic RNG stream derivation.
//!
//! Every random decision in an experiment draws from a ChaCha8 stream whose
//! seed is a splitmix64 hash of (master seed, stream id, salt). Walks,
//! batch schedules, and dataset splits therefore never share RNG state, and
//! results are independent of worker scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Salt for per-walk position/step streams.
pub const SALT_WALK: u64 = 0x57414c4b; // "WALK"
/// Salt for per-walk batch visit order.
pub const SALT_BATCH_ORDER: u64 = 0x42415443; // "BATC"
/// Salt for dataset train/test splits.
pub const SALT_SPLIT: u64 = 0x53504c54; // "SPLT"
/// Salt for dataset subsampling.
pub const SALT_SUBSAMPLE: u64 = 0x53554253; // "SUBS"
/// Salt for fixed evaluation batches.
pub const SALT_EVAL: u64 = 0x4556414c; // "EVAL"

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Hashes (master, stream, salt) into a single 64-bit seed.
pub fn derive_seed(master: u64, stream: u64, salt: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ salt)
}

/// A ChaCha8 RNG on the derived stream.
pub fn derive_rng(master: u64, stream: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, salt))
}

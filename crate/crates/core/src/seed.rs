//! Stable seed derivation.
//!
//! Per-session and per-channel seeds are derived from a global seed and a
//! string key so that work can be scheduled in any order without changing
//! results. The hash is FNV-1a followed by a splitmix64 finaliser; it is
//! stable across platforms and releases, unlike `std`'s `DefaultHasher`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `(global, key)`.
pub fn derive_seed(global: u64, key: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in global.to_le_bytes().iter().chain(key.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Seed derivation. Every random stream in the crate is a `ChaCha8Rng`
//! seeded from a single top-level `u64` through [`child_seed`], so results
//! never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `index` under `seed`.
///
/// The mapping is frozen: `mix64(mix64(seed) ^ mix64(index + GOLDEN))`.
/// Changing it changes every simulated number in the crate.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    mix64(mix64(seed) ^ mix64(index.wrapping_add(GOLDEN)))
}

/// Derive a labelled sub-seed, e.g. for separate analyses sharing one top-level seed.
pub fn labelled_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label; stable across platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    child_seed(seed, h)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

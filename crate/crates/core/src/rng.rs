//! Seeded random streams. Every random decision in the crate draws from a [`SimRng`] so a run is
//! reproducible from its seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`: `mix(master ^ mix(index))`. Any single trial can be
/// replayed by seeding [`seeded`] with this value.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    mix(master ^ mix(index))
}

//! Stable per-trial seed derivation.
//!
//! A trial seed is `mix(mix(mix(master) ^ n) ^ trial)` where `mix` is the
//! SplitMix64 finalizer. The derivation depends only on the three integers,
//! so trials can be replayed in any order or in parallel.

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, n: u64, trial: u64) -> u64 {
    mix64(mix64(mix64(master) ^ n) ^ trial)
}

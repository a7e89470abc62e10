//! Seed derivation helpers.
//!
//! Everything in this crate that needs randomness takes an explicit u64
//! seed. Independent streams (per run, per level, per probe) are derived
//! from a master seed with splitmix64 so that changing one consumer's
//! stream count never perturbs another's.

/// One splitmix64 step: maps a seed and stream index to a well-mixed u64.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

//! Deterministic seed derivation.
//!
//! All randomness in the toolkit flows from explicit 64-bit seeds through
//! splitmix64 mixing, so any trial, selection or noise draw can be
//! regenerated in isolation — there is no global RNG state anywhere.

/// splitmix64 finalizer; a full-avalanche mix of one 64-bit word.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a base seed and up to two labels
/// (e.g. grid-point id and trial index).
pub fn combine(base: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(a)).wrapping_add(splitmix64(b ^ 0x5851_f42d_4c95_7f2d)))
}

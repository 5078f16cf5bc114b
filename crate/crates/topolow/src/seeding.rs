//! Deterministic seed derivation.
//!
//! Every stochastic stage (dataset generation, candidate evaluation, fold
//! fitting, replicate fits) gets its own seed derived from a base seed and a
//! stream index, so concurrent evaluation order cannot change any result.

/// SplitMix64 mix of a base seed and a stream index.
pub fn derive(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

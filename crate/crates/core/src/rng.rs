//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator keyed by a
//! 64-bit seed and a 64-bit stream id, so item `k` of a batch is a function of
//! `(seed, k)` alone and parallel generation reproduces sequential output.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator for substream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of indices into a seed. Pure and order-sensitive.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(seed), |acc, &p| mix64(acc ^ mix64(p.wrapping_add(0x632B_E59B_D9B4_E019))))
}

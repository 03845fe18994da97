//! Seeded random streams.
//!
//! Every consumer derives a ChaCha8 generator from a `(seed, stream)` pair.
//! Different streams of the same seed never share keystream blocks, and
//! different seeds produce unrelated keys.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers used across the crate.
pub mod stream {
    pub const LABELED: u64 = 0;
    pub const UNLABELED: u64 = 1;
    pub const FOLDS: u64 = 2;
    pub const FOLDS_UNLABELED: u64 = 3;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer, used to derive child seeds.
pub fn mix_seed(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

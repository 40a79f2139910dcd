//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed. The 64-bit
//! ChaCha stream id separates independent uses of the same seed, so two
//! (seed, stream) pairs never share keystream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream id for the data-generating process.
pub const STREAM_DATA: u64 = 0;
/// Stream id for importance weights.
pub const STREAM_WEIGHTS: u64 = 1;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of the `i`-th Monte-Carlo replicate derived from a base seed.
pub fn replicate_seed(base: u64, i: u64) -> u64 {
    // SplitMix64 finalizer: a bijection, so distinct replicates get
    // distinct keys.
    let mut z = base.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

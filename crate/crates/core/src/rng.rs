//! Deterministic RNG streams.
//!
//! Every random choice in training draws from a ChaCha8 stream whose seed is
//! derived from the run seed, a purpose tag and an index (usually the step).
//! Two runs that agree on these three values consume identical randomness,
//! independent of thread count or of which other streams were used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Purpose tags for derived streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Pairs = 2,
    Lots = 3,
    Step = 4,
    Noise = 5,
    Split = 6,
    Synth = 7,
    Subsample = 8,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `(seed, tag, index)` into a 64-bit sub-seed.
pub fn derive_seed(seed: u64, tag: Stream, index: u64) -> u64 {
    let a = splitmix64(seed ^ splitmix64(tag as u64));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

/// Opens the stream for `(seed, tag, index)`.
pub fn stream(seed: u64, tag: Stream, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, tag, index))
}

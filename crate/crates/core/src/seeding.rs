//! Splittable seed derivation.
//!
//! Every random stream of an experiment is keyed by `(experiment seed, stream, index)`
//! and mixed with SplitMix64, so trial `i` sees the same numbers no matter which
//! worker runs it or in what order.

/// Independent random streams drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Input = 1,
    Weights = 2,
    Filler = 3,
    NullNoise = 4,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for element `index` of `stream` under experiment seed `seed`.
pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    let keyed = splitmix64(seed ^ splitmix64(stream as u64));
    splitmix64(keyed.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}

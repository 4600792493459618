//! Deterministic RNG substream derivation.
//!
//! Every stochastic stage of an experiment owns an RNG derived from the
//! scenario seed plus a list of domain-separating labels. The derivation is a
//! fixed SplitMix64 chain, so reports are reproducible across runs and
//! platforms, and independent (SNR point x arm x trial) jobs never share a
//! stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 step; the standard finalizer constants.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a base seed with label words into a single substream seed.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    let mut state = base;
    let mut acc = splitmix64(&mut state);
    for &label in labels {
        state ^= label;
        acc ^= splitmix64(&mut state).rotate_left(17);
    }
    acc
}

/// A seeded ChaCha stream for the given labels under `base`.
pub fn rng_for(base: u64, labels: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(base, labels))
}

/// Label constants so substream identities stay stable across refactors.
pub mod label {
    pub const NOISE: u64 = 0x01;
    pub const PAYLOAD: u64 = 0x02;
    pub const DITHER: u64 = 0x03;
    pub const CHANNEL: u64 = 0x04;
    pub const RPE: u64 = 0x05;
    pub const AMBIENT: u64 = 0x06;
    pub const EXTRA_BITS: u64 = 0x07;
}

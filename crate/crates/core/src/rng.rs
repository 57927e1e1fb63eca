//! Seedable, splittable random streams.
//!
//! Every stream is a ChaCha8 generator whose seed is a mix of a master seed
//! and a structural key (a prefix, a trial index, ...). Two streams derived
//! from the same `(seed, key)` produce identical output regardless of the
//! order in which they are created.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::Prefix;

/// Domain separators for derived streams.
pub mod tags {
    pub const EDGE: u64 = 0x6564_6765;
    pub const TRIAL: u64 = 0x7472_6961;
    pub const SIGN: u64 = 0x7369_676e;
    pub const INSTANCE: u64 = 0x696e_7374;
    pub const USER: u64 = 0x7573_6572;
}

#[derive(Clone, Debug)]
pub struct RandomStream(ChaCha8Rng);

impl RandomStream {
    pub fn from_seed(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// The stream for `(seed, tag, prefix)`.
    pub fn for_prefix(seed: u64, tag: u64, w: &Prefix) -> Self {
        Self::from_seed(prefix_key(seed, tag, w))
    }

    /// The stream for `(seed, tag, index)`.
    pub fn for_index(seed: u64, tag: u64, index: u64) -> Self {
        Self::from_seed(mix(mix(seed ^ tag.rotate_left(17)) ^ index))
    }

    /// Detaches an independent child stream.
    pub fn split(&mut self) -> RandomStream {
        Self::from_seed(mix(self.0.next_u64()))
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `(seed, tag, w)` into 64 bits. The length is folded in last so that
/// words differing only by leading zeros get different keys.
pub(crate) fn prefix_key(seed: u64, tag: u64, w: &Prefix) -> u64 {
    let mut h = mix(seed ^ tag.rotate_left(17));
    for chunk in w.bits().chunks(64) {
        let word = chunk.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        h = mix(h ^ word);
    }
    mix(h ^ (w.len() as u64).wrapping_mul(0xff51_afd7_ed55_8ccd))
}

//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit 64-bit seed and draws from
//! its own substream. A substream is a ChaCha8 generator whose 64-bit seed is
//! `splitmix64(seed ^ fnv1a64(tag))`, so the sequence for a given
//! `(seed, tag)` pair is identical on every platform and independent of the
//! order in which other operations consume randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and an operation tag.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    splitmix64(seed ^ fnv1a64(tag.as_bytes()))
}

/// Derive a child seed from a parent seed, a tag, and an index (bootstrap
/// member, replication number, tree node...).
pub fn derive_indexed(seed: u64, tag: &str, index: u64) -> u64 {
    splitmix64(derive_seed(seed, tag) ^ splitmix64(index))
}

pub fn stream(seed: u64, tag: &str) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, tag))
}

pub fn indexed_stream(seed: u64, tag: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_indexed(seed, tag, index))
}

//! Seed derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded by
//! [`derive_seed`]`(master, stream, index)`. The mixing function is part of
//! the file-format contract and must not change:
//!
//! ```text
//! label_hash(stream) = FNV-1a 64 over the UTF-8 bytes of the label
//! mix(z)             = SplitMix64 finalizer:
//!                        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//!                        z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//!                        z ^ (z >> 31)
//! derive_seed(m, s, i) = mix(mix(m ^ label_hash(s)) + (i + 1) * 0x9e3779b97f4a7c15)
//! ```
//!
//! All arithmetic wraps modulo 2^64. The derived 64-bit value is expanded to
//! a ChaCha key with `SeedableRng::seed_from_u64`.
//!
//! [`ChaCha8Rng`]: rand_chacha::ChaCha8Rng

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Stream labels used by the generators and experiments.
pub mod stream {
    pub const CONSTRAINT: &str = "constraint";
    pub const SYMMETRY_BASE: &str = "symmetry-base";
    pub const SYMMETRY_PERMUTATION: &str = "symmetry-permutation";
    pub const TRIAL: &str = "trial";
    pub const SUBPROBLEM_CHOICE: &str = "subproblem-choice";
}

pub fn label_hash(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: &str, index: u64) -> u64 {
    mix(mix(master ^ label_hash(stream)).wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_for(master: u64, stream: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

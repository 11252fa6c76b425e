//! Seed derivation and the generator used everywhere.
//!
//! All randomness flows through [`ChaCha8Rng`], whose output stream is fixed
//! by its published algorithm, so a `(seed, tags)` pair names the same stream
//! on every platform. Child seeds are derived with the SplitMix64 finalizer.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a path of integer tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(mix64(master), |acc, &t| mix64(acc ^ mix64(t.wrapping_add(GOLDEN))))
}

/// Derive a child seed from a string tag (e.g. a gene or lab name).
pub fn derive_seed_str(master: u64, tag: &str) -> u64 {
    // FNV-1a, stable across platforms and std versions
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    derive_seed(master, &[h])
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    rng_from_seed(derive_seed(master, tags))
}

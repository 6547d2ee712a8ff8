//! Seeded random streams.
//!
//! Every randomized routine takes an explicit `u64` seed. Independent
//! consumers of the same seed (dictionary atoms, target weights, noise,
//! perturbed functionals) draw from distinct ChaCha streams so that changing
//! one component never shifts the random numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub(crate) mod stream {
    pub const DICTIONARY: u64 = 1;
    pub const TARGET: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const MODULUS: u64 = 4;
    pub const FUNCTIONAL: u64 = 5;
    pub const RELAXATION: u64 = 6;
}

pub(crate) fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Deterministic per-iteration seed derived from a run seed (SplitMix64).
pub(crate) fn derive(seed: u64, m: u64, k: u64) -> u64 {
    let mut z =
        seed ^ m.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ k.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Seeded randomness.
//!
//! Every stochastic stage draws from a ChaCha8 stream (`rand_chacha`) seeded
//! through `SeedableRng::seed_from_u64`, so instances reproduce bit-for-bit on
//! any platform. Uniform reals use the top 53 bits of one `u64` draw.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as Rng;

/// Builds the generator for stream `stream` of a seed.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent seed for a named stage from a top-level seed
/// (SplitMix64 finalizer over `seed ^ stage * golden`).
pub fn stage_seed(seed: u64, stage: u64) -> u64 {
    let mut z = seed ^ stage.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)`.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n` (`n > 0`), by rejection-free multiply-shift.
pub fn index(rng: &mut impl RngCore, n: usize) -> usize {
    debug_assert!(n > 0);
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Poisson draw by Knuth's product-of-uniforms method; intended for small means.
pub fn poisson(rng: &mut impl RngCore, mean: f64) -> u64 {
    let limit = libm::exp(-mean);
    let mut k = 0;
    let mut p = uniform(rng);
    while p > limit {
        k += 1;
        p *= uniform(rng);
    }
    k
}

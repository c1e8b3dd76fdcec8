//! Seeded sampling helpers.
//!
//! All randomness in this crate flows through an explicit ChaCha8 stream so
//! identical seeds reproduce identical bytes on every platform. The uniform
//! mappings below are written out by hand rather than taken from a
//! distribution crate so the sampled values are pinned forever.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from `[lo, hi)` using the top 53 bits of one `u64`.
pub fn uniform_f64(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
    lo + (hi - lo) * u
}

/// Uniform integer in `[0, n)`. Modulo bias is below 2^-50 for the sizes
/// used here (dataset and pitch indices).
pub fn uniform_usize(rng: &mut impl RngCore, n: usize) -> usize {
    debug_assert!(n > 0);
    (rng.next_u64() % n as u64) as usize
}

/// Inclusive integer range.
pub fn uniform_range_i64(rng: &mut impl RngCore, lo: i64, hi: i64) -> i64 {
    debug_assert!(lo <= hi);
    let span = (hi - lo + 1) as u64;
    lo + (rng.next_u64() % span) as i64
}

/// Standard normal via Box-Muller.
pub fn normal_f64(rng: &mut impl RngCore, mean: f64, sigma: f64) -> f64 {
    let u1 = 1.0 - uniform_f64(rng, 0.0, 1.0); // (0, 1]
    let u2 = uniform_f64(rng, 0.0, 1.0);
    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
    mean + sigma * z
}

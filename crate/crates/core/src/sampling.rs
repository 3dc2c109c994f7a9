//! Seeded random sampling shared by the numerical checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed used when a caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

pub type SampleRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Point drawn uniformly from `[lo, hi]^dim`.
pub fn uniform_point(rng: &mut SampleRng, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(lo..=hi)).collect()
}

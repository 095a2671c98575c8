//! Seeded, counter-based randomness for reproducible experiments.
//!
//! Every stochastic operation in the crate draws from [`ShotRng`], a thin
//! wrapper around the ChaCha8 stream cipher. ChaCha is counter based, so a
//! `(seed, stream position)` pair fully determines every draw; reports that
//! embed their seed can be replayed bit-identically on any platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Name of the generator, recorded in reports next to the seed.
pub const GENERATOR: &str = "chacha8";

/// Deterministic shot-sampling generator.
pub struct ShotRng {
    inner: ChaCha8Rng,
}

impl ShotRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        ShotRng { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Uniform draw from [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Modulo bias is < n / 2^64; irrelevant for the n <= a few hundred
        // used here.
        (self.inner.next_u64() % n as u64) as usize
    }

    /// Draw an index from the discrete distribution given by `weights`.
    ///
    /// Weights need not be normalized; negative weights within `-1e-10` are
    /// clamped to zero (floating-point dust from upstream linear algebra).
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        let mut u = self.uniform() * total;
        for (i, w) in weights.iter().enumerate() {
            let w = w.max(0.0);
            if u < w {
                return i;
            }
            u -= w;
        }
        weights.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = ShotRng::seed_from_u64(7);
        let mut b = ShotRng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn categorical_point_mass() {
        let mut rng = ShotRng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(rng.categorical(&[0.0, 0.0, 1.0, 0.0]), 2);
        }
    }

    #[test]
    fn categorical_frequencies_roughly_match() {
        let mut rng = ShotRng::seed_from_u64(42);
        let weights = [0.5, 0.3, 0.2];
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[rng.categorical(&weights)] += 1;
        }
        for (c, w) in counts.iter().zip(weights.iter()) {
            let freq = *c as f64 / n as f64;
            assert!((freq - w).abs() < 0.01, "freq {freq} vs weight {w}");
        }
    }
}

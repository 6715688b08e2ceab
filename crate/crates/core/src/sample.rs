//! Deterministic sampling: a scrambled Halton sequence for box grids and a
//! seeded ChaCha stream for everything random.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Low-discrepancy points in [-1, 1]^dim, Cramer-shifted by a seed so
/// different seeds give different but reproducible point sets.
pub struct Halton {
    dim: usize,
    index: u64,
    shift: Vec<f64>,
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton supports dim <= 8");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.gen::<f64>()).collect();
        Self { dim, index: 0, shift }
    }

    fn radical_inverse(mut i: u64, base: u64) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }

    /// Next point in [-1, 1]^dim.
    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        let i = self.index;
        (0..self.dim)
            .map(|d| {
                let u = (Self::radical_inverse(i, PRIMES[d]) + self.shift[d]).fract();
                2.0 * u - 1.0
            })
            .collect()
    }
}

/// The one RNG constructor used everywhere, so a u64 seed reproduces runs
/// bit-for-bit.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

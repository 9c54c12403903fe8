//! Run configuration: tolerances, sampling parameters and the RNG seed that
//! makes every sampled check reproducible.

use crate::expr::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Config {
    /// Seed for all sample generation.
    pub seed: u64,
    /// Radius of the neighborhood ball used by "locally" checks.
    pub radius: f64,
    /// Below this magnitude at every sample an expression counts as zero.
    pub tol_zero: f64,
    /// Above this magnitude at some sample an expression is certified nonzero.
    pub tol_nonzero: f64,
    /// Relative singular-value threshold for numeric rank.
    pub tol_rank: f64,
    /// Residual tolerance for verification checks.
    pub tol_resid: f64,
    /// Sample count for zero tests.
    pub zero_samples: usize,
    /// Sample count for constant-rank flags.
    pub rank_samples: usize,
    /// Sample count for equivalence-relation residuals.
    pub resid_samples: usize,
    /// Integrator step.
    pub step: f64,
    /// Integrator horizon.
    pub horizon: f64,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            seed: 0,
            radius: 0.1,
            tol_zero: 1e-10,
            tol_nonzero: 1e-8,
            tol_rank: 1e-8,
            tol_resid: 1e-8,
            zero_samples: 64,
            rank_samples: 16,
            resid_samples: 32,
            step: 1e-4,
            horizon: 0.5,
        }
    }
}

impl Config {
    /// Deterministic sample points in the coordinate ball of `self.radius`
    /// around `center`. The same (seed, center-dimension, count) always
    /// produces the same offsets; the center itself is not included.
    pub fn samples_around(&self, center: &Point, count: usize) -> Vec<Point> {
        let dim = center.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ ((dim as u64) << 32));
        let names: Vec<&str> = center.names().collect();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut p = Point::new();
            for name in &names {
                let base = center.get(name).unwrap();
                let off: f64 = rng.gen_range(-self.radius..=self.radius);
                p.set(*name, base + off);
            }
            out.push(p);
        }
        out
    }

    /// RNG for callers that need their own deterministic stream.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
    }
}

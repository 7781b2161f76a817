//! Seeded sample points in a centred box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_POINTS: usize = 100;
pub const DEFAULT_HALF_WIDTH: f64 = 1.0;

/// Uniform points in `[-half_width, half_width]^dim`, reproducible from the seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sampling {
    pub seed: u64,
    #[serde(alias = "count")]
    pub points: usize,
    #[serde(rename = "box")]
    pub half_width: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { seed: DEFAULT_SEED, points: DEFAULT_POINTS, half_width: DEFAULT_HALF_WIDTH }
    }
}

impl Sampling {
    pub fn new(seed: u64, points: usize, half_width: f64) -> Sampling {
        Sampling { seed, points, half_width }
    }

    pub fn with_points(self, points: usize) -> Sampling {
        Sampling { points, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Sampling {
        Sampling { seed, ..self }
    }

    pub fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        self.stream(dim, 0)
    }

    /// Independent point set for the same seed; `salt` selects the ChaCha stream.
    pub fn stream(&self, dim: usize, salt: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(salt);
        let b = self.half_width;
        (0..self.points).map(|_| (0..dim).map(|_| rng.gen_range(-b..=b)).collect()).collect()
    }

    /// Seeded generator for randomized inputs (coefficients, connections).
    pub fn rng(&self, salt: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(salt.wrapping_add(1 << 32));
        rng
    }
}

/// Random polynomial in the variables `0..nvars` with `terms` monomials of total
/// degree at most `degree` and coefficients uniform in `[-1, 1]`.
pub fn random_polynomial(rng: &mut impl Rng, nvars: usize, degree: u32, terms: usize) -> crate::expr::Expr {
    use crate::expr::Expr;
    let monomials = (0..terms).map(|_| {
        let mut factors = vec![Expr::constant(rng.gen_range(-1.0..=1.0))];
        if nvars > 0 {
            let deg = rng.gen_range(0..=degree);
            factors.extend((0..deg).map(|_| Expr::var(rng.gen_range(0..nvars))));
        }
        Expr::product(factors)
    });
    Expr::sum(monomials.collect::<Vec<_>>()).simplify()
}

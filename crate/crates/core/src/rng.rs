use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;
use crate::Point;

/// Seeded ChaCha8 stream with the few distributions the crate needs.
pub(crate) struct Sampler(ChaCha8Rng);

impl Sampler {
    pub(crate) fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub(crate) fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub(crate) fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
    }

    pub(crate) fn direction(&mut self, dim: usize) -> Point {
        loop {
            let mut v = [0.0; 3];
            for c in v.iter_mut().take(dim) {
                *c = self.normal();
            }
            let n = math::norm(&v);
            if n > 1e-12 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    pub(crate) fn in_ball(&mut self, dim: usize, center: &Point, r: f64) -> Point {
        loop {
            let mut v = [0.0; 3];
            for c in v.iter_mut().take(dim) {
                *c = 2.0 * self.uniform() - 1.0;
            }
            if math::dot(&v, &v) < 1.0 {
                return math::add_scaled(center, r, &v);
            }
        }
    }
}

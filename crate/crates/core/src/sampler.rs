//! Seeded point generator used by every randomized checker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::point::Point;

/// Smallest magnitude of the log-uniform component.
pub const MIN_MAGNITUDE: f64 = 1e-3;
/// Largest magnitude of the log-uniform component.
pub const MAX_MAGNITUDE: f64 = 1e3;

/// Draws points whose coordinates mix uniform `[-1, 1]` values with
/// log-uniform magnitudes in `[1e-3, 1e3]` carrying a random sign.
///
/// The stream is fully determined by `(dim, seed)`.
#[derive(Debug, Clone)]
pub struct PointSampler {
    dim: usize,
    rng: ChaCha8Rng,
}

impl PointSampler {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1, "sampler dimension must be positive");
        PointSampler {
            dim,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn coordinate(&mut self) -> f64 {
        if self.rng.gen_bool(0.5) {
            self.rng.gen_range(-1.0..=1.0)
        } else {
            let exponent = self
                .rng
                .gen_range(MIN_MAGNITUDE.log10()..=MAX_MAGNITUDE.log10());
            let sign = if self.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            sign * 10f64.powf(exponent)
        }
    }

    /// A point from the magnitude mixture.
    pub fn point(&mut self) -> Point {
        let coords = (0..self.dim).map(|_| self.coordinate()).collect();
        Point::new(coords).expect("sampled coordinates are finite")
    }

    /// A point with coordinates uniform in `[-scale, scale]`.
    pub fn point_at_scale(&mut self, scale: f64) -> Point {
        let coords = (0..self.dim)
            .map(|_| scale * self.rng.gen_range(-1.0..=1.0))
            .collect();
        Point::new(coords).expect("scaled coordinates are finite")
    }

    /// Uniform scalar in `[0, 1]`.
    pub fn unit(&mut self) -> f64 {
        self.rng.gen_range(0.0..=1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = PointSampler::new(3, 7);
        let mut b = PointSampler::new(3, 7);
        for _ in 0..50 {
            assert_eq!(a.point(), b.point());
            assert_eq!(a.unit(), b.unit());
        }
    }

    #[test]
    fn magnitudes_cover_requested_range() {
        let mut s = PointSampler::new(1, 1);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for _ in 0..5000 {
            let v = s.point()[0].abs();
            assert!(v <= MAX_MAGNITUDE * (1.0 + 1e-12));
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(hi > 100.0, "largest sample {hi}");
        assert!(lo < 1e-2, "smallest sample {lo}");
    }
}

//! Band-limited real fields on the 2-torus `[0, 2π)²`.
//!
//! A field is stored through its Fourier coefficients, `f(x) = Σ_k c_k e^{ik·x}`,
//! on the square `[-band, band]²` with everything outside the Euclidean
//! ball `|k| ≤ band` equal to zero.

mod fft;
mod field;
mod littlewood_paley;

pub use fft::{forward_real, forward_real_pair, inverse, inverse_real_pair};
pub use field::{Multiplier, SpectralField};
pub use littlewood_paley::{
    besov_norm, chi, lp_block, lp_block_count, lp_bump, phi, transition, NormValue,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation level, physical grid and dispersion exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    cutoff_n: usize,
    grid_m: usize,
    alpha: f64,
}

/// How much of a degree-`d` product must survive sampling on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    /// Only the mean (the integral over the torus) must be exact.
    Integral,
    /// The product projected back to `|k| ≤ band` must be exact.
    Projected,
    /// The whole spectrum of the product must be exact.
    Full,
}

/// Smallest odd `m ≥ min_points` whose prime factors are all at most 13.
pub fn smooth_odd_at_least(min_points: usize) -> usize {
    let mut m = min_points.max(1);
    if m % 2 == 0 {
        m += 1;
    }
    loop {
        let mut r = m;
        for p in [3, 5, 7, 11, 13] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}

/// Minimum number of grid points per dimension for a degree-`degree`
/// product of fields with band `band`.
pub fn required_grid(band: usize, degree: usize, exactness: Exactness) -> usize {
    let d = degree.max(1);
    match exactness {
        Exactness::Integral => d * band + 1,
        Exactness::Projected => (d + 1) * band + 1,
        Exactness::Full => 2 * d * band + 1,
    }
}

impl Lattice {
    pub fn new(cutoff_n: usize, grid_m: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.5 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if cutoff_n == 0 {
            return Err(Error::ZeroCutoff);
        }
        if grid_m % 2 == 0 {
            return Err(Error::Config(format!("grid size {grid_m} must be odd")));
        }
        if grid_m < 2 * cutoff_n + 1 {
            return Err(Error::GridTooSmall {
                grid_m,
                band: cutoff_n,
                required: 2 * cutoff_n + 1,
            });
        }
        Ok(Self {
            cutoff_n,
            grid_m,
            alpha,
        })
    }

    /// Lattice whose grid is exact for degree-`degree` products of fields
    /// band-limited to `cutoff_n`.
    pub fn for_degree(
        cutoff_n: usize,
        alpha: f64,
        degree: usize,
        exactness: Exactness,
    ) -> Result<Self> {
        let need = required_grid(cutoff_n, degree, exactness).max(2 * cutoff_n + 1);
        Self::new(cutoff_n, smooth_odd_at_least(need), alpha)
    }

    pub fn cutoff_n(&self) -> usize {
        self.cutoff_n
    }

    pub fn grid_m(&self) -> usize {
        self.grid_m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same truncation on another grid.
    pub fn with_grid(&self, grid_m: usize) -> Result<Self> {
        Self::new(self.cutoff_n, grid_m, self.alpha)
    }

    /// Re-gridded copy exact for degree-`degree` products.
    pub fn regrid(&self, degree: usize, exactness: Exactness) -> Self {
        let need = required_grid(self.cutoff_n, degree, exactness).max(2 * self.cutoff_n + 1);
        Self {
            grid_m: smooth_odd_at_least(need),
            ..*self
        }
    }

    /// Whether the grid integrates degree-`degree` products exactly.
    pub fn is_exact_for(&self, degree: usize, exactness: Exactness) -> bool {
        self.grid_m >= required_grid(self.cutoff_n, degree, exactness)
    }

    /// `1 + |k|^{2α}`, the squared symbol of `D^α`.
    pub fn jap_sq(&self, k1: i64, k2: i64) -> f64 {
        jap_sq(self.alpha, k1, k2)
    }

    pub fn cell_area(&self) -> f64 {
        let h = 2.0 * std::f64::consts::PI / self.grid_m as f64;
        h * h
    }
}

/// `1 + |k|^{2α}`.
pub fn jap_sq(alpha: f64, k1: i64, k2: i64) -> f64 {
    let r2 = (k1 * k1 + k2 * k2) as f64;
    1.0 + r2.powf(alpha)
}

/// Iterate over `(k1, k2)` with `k1² + k2² ≤ band²`.
pub fn ball(band: usize) -> impl Iterator<Item = (i64, i64)> {
    let b = band as i64;
    (-b..=b).flat_map(move |k1| {
        (-b..=b).filter_map(move |k2| (k1 * k1 + k2 * k2 <= b * b).then_some((k1, k2)))
    })
}

/// Representative of the half-lattice: `k1 > 0`, or `k1 = 0` and `k2 > 0`.
pub fn in_half_lattice(k1: i64, k2: i64) -> bool {
    k1 > 0 || (k1 == 0 && k2 > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_grid_sizes() {
        assert_eq!(smooth_odd_at_least(1), 1);
        assert_eq!(smooth_odd_at_least(8), 9);
        assert_eq!(smooth_odd_at_least(257), 273);
        assert_eq!(smooth_odd_at_least(17), 21);
    }

    #[test]
    fn lattice_rejects_bad_input() {
        assert!(matches!(
            Lattice::new(4, 33, 1.2),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(matches!(Lattice::new(0, 33, 0.9), Err(Error::ZeroCutoff)));
        assert!(matches!(
            Lattice::new(20, 33, 0.9),
            Err(Error::GridTooSmall { .. })
        ));
        assert!(Lattice::new(4, 32, 0.9).is_err());
    }

    #[test]
    fn ball_counts() {
        assert_eq!(ball(1).count(), 5);
        assert_eq!(ball(5).count(), 81);
        assert!(ball(5).any(|k| k == (3, 4)));
    }

    #[test]
    fn exactness_levels() {
        let l = Lattice::for_degree(16, 0.9, 4, Exactness::Integral).unwrap();
        assert!(l.grid_m() >= 65 && l.grid_m() % 2 == 1);
        assert!(l.is_exact_for(4, Exactness::Integral));
        assert!(!l.is_exact_for(4, Exactness::Full));
    }
}

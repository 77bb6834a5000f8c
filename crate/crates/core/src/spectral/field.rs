use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{fft, jap_sq, Lattice};
use crate::error::{Error, Result};

/// Fourier multipliers acting diagonally on coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Multiplier {
    /// `|k|^γ`.
    AbsGrad,
    /// `(1 + |k|^{2α})^{γ/(2α)}`.
    JapBracket,
    /// `(1 + |k|^{2α})^{-1/2}`; the exponent argument is ignored.
    InvJapAlpha,
}

/// Real field on the torus given by Hermitian coefficients on `[-band, band]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    lattice: Lattice,
    band: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(lattice: Lattice, band: usize) -> Self {
        let side = 2 * band + 1;
        Self {
            lattice,
            band,
            coeffs: vec![Complex64::default(); side * side],
        }
    }

    /// Field with coefficients `f(k)` on `|k| ≤ band`. The closure must
    /// itself satisfy `f(-k) = conj f(k)`; this is checked in debug builds.
    pub fn from_fn(lattice: Lattice, band: usize, mut f: impl FnMut(i64, i64) -> Complex64) -> Self {
        let mut out = Self::zeros(lattice, band);
        let b = band as i64;
        for k1 in -b..=b {
            for k2 in -b..=b {
                if k1 * k1 + k2 * k2 <= b * b {
                    let i = out.index(k1, k2);
                    out.coeffs[i] = f(k1, k2);
                }
            }
        }
        debug_assert!(out.is_hermitian(1e-12), "from_fn closure is not Hermitian");
        out
    }

    /// Field with a conjugate pair `c e^{ik·x} + conj(c) e^{-ik·x}` (or the
    /// real mean `Re c` when `k = 0`).
    pub fn mode(lattice: Lattice, band: usize, k: (i64, i64), c: Complex64) -> Self {
        let mut out = Self::zeros(lattice, band);
        if k == (0, 0) {
            out.set_pair(0, 0, Complex64::new(c.re, 0.0));
        } else {
            out.set_pair(k.0, k.1, c);
        }
        out
    }

    pub fn constant(lattice: Lattice, value: f64) -> Self {
        Self::mode(lattice, 0, (0, 0), Complex64::new(value, 0.0))
    }

    pub(crate) fn from_raw(lattice: Lattice, band: usize, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), (2 * band + 1) * (2 * band + 1));
        let mut f = Self {
            lattice,
            band,
            coeffs,
        };
        f.clear_outside_ball();
        f
    }

    fn clear_outside_ball(&mut self) {
        let b = self.band as i64;
        for k1 in -b..=b {
            for k2 in -b..=b {
                if k1 * k1 + k2 * k2 > b * b {
                    let i = self.index(k1, k2);
                    self.coeffs[i] = Complex64::default();
                }
            }
        }
    }

    #[inline]
    fn index(&self, k1: i64, k2: i64) -> usize {
        let b = self.band as i64;
        let side = 2 * b + 1;
        ((k1 + b) * side + (k2 + b)) as usize
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Raw coefficient square, row-major in `k1`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let b = self.band as i64;
        if k1.abs() > b || k2.abs() > b {
            return Complex64::default();
        }
        self.coeffs[self.index(k1, k2)]
    }

    /// Set `c_k = c` and `c_{-k} = conj c`. Ignored outside the ball.
    pub fn set_pair(&mut self, k1: i64, k2: i64, c: Complex64) {
        let b = self.band as i64;
        if k1 * k1 + k2 * k2 > b * b {
            return;
        }
        if k1 == 0 && k2 == 0 {
            let i = self.index(0, 0);
            self.coeffs[i] = Complex64::new(c.re, 0.0);
            return;
        }
        let i = self.index(k1, k2);
        let j = self.index(-k1, -k2);
        self.coeffs[i] = c;
        self.coeffs[j] = c.conj();
    }

    /// Non-zero modes `((k1, k2), c_k)` in the ball.
    pub fn modes(&self) -> impl Iterator<Item = ((i64, i64), Complex64)> + '_ {
        let b = self.band as i64;
        (-b..=b)
            .flat_map(move |k1| (-b..=b).map(move |k2| (k1, k2)))
            .zip(self.coeffs.iter().copied())
            .filter(move |((k1, k2), _)| k1 * k1 + k2 * k2 <= b * b)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.coeffs.len();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        (0..n).all(|i| (self.coeffs[i] - self.coeffs[n - 1 - i].conj()).norm() <= tol * scale)
    }

    fn symmetrize(&mut self) {
        let n = self.coeffs.len();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let avg = (self.coeffs[i] + self.coeffs[j].conj()) * 0.5;
            self.coeffs[i] = avg;
            self.coeffs[j] = avg.conj();
        }
        let mid = n / 2;
        self.coeffs[mid].im = 0.0;
    }

    /// Same coefficients with a different band; modes beyond the new band
    /// are dropped.
    pub fn with_band(&self, band: usize) -> Self {
        let mut out = Self::zeros(self.lattice, band);
        let b = band.min(self.band) as i64;
        for k1 in -b..=b {
            for k2 in -b..=b {
                if k1 * k1 + k2 * k2 <= (band * band) as i64 {
                    let i = out.index(k1, k2);
                    out.coeffs[i] = self.coeff(k1, k2);
                }
            }
        }
        out
    }

    /// Same coefficients on another lattice.
    pub fn relattice(&self, lattice: Lattice) -> Self {
        Self {
            lattice,
            band: self.band,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Sharp projection onto `|k| ≤ n`, boundary included.
    pub fn project(&self, n: usize) -> Self {
        let mut out = self.with_band(n.min(self.band));
        out.band = n.min(self.band);
        out
    }

    pub fn multiplier(&self, kind: Multiplier, gamma: f64) -> Result<Self> {
        let alpha = self.lattice.alpha();
        if kind == Multiplier::AbsGrad && gamma < 0.0 && self.coeff(0, 0).norm() != 0.0 {
            return Err(Error::NegativePowerAtZeroMode);
        }
        Ok(self.map_symbol(|k1, k2| {
            let r2 = (k1 * k1 + k2 * k2) as f64;
            match kind {
                Multiplier::AbsGrad => {
                    if r2 == 0.0 {
                        if gamma == 0.0 { 1.0 } else { 0.0 }
                    } else {
                        r2.powf(0.5 * gamma)
                    }
                }
                Multiplier::JapBracket => jap_sq(alpha, k1, k2).powf(gamma / (2.0 * alpha)),
                Multiplier::InvJapAlpha => jap_sq(alpha, k1, k2).powf(-0.5),
            }
        }))
    }

    /// Multiply each coefficient by a real radial symbol `s(k)`.
    pub fn map_symbol(&self, mut s: impl FnMut(i64, i64) -> f64) -> Self {
        let mut out = self.clone();
        let b = self.band as i64;
        for k1 in -b..=b {
            for k2 in -b..=b {
                let i = out.index(k1, k2);
                if out.coeffs[i] != Complex64::default() {
                    out.coeffs[i] *= s(k1, k2);
                }
            }
        }
        out
    }

    /// Samples on the lattice grid.
    pub fn to_physical(&self) -> Result<Vec<f64>> {
        self.check_grid()?;
        let z = fft::inverse(&self.coeffs, self.band, self.lattice.grid_m());
        Ok(z.into_iter().map(|c| c.re).collect())
    }

    /// Samples of two fields on the same lattice via one complex transform.
    pub fn to_physical_pair(a: &Self, b: &Self) -> Result<(Vec<f64>, Vec<f64>)> {
        if a.lattice != b.lattice {
            return Err(Error::LatticeMismatch);
        }
        a.check_grid()?;
        if a.band == b.band {
            Ok(fft::inverse_real_pair(&a.coeffs, &b.coeffs, a.band, a.lattice.grid_m()))
        } else {
            let band = a.band.max(b.band);
            let (a2, b2) = (a.with_band(band), b.with_band(band));
            Ok(fft::inverse_real_pair(&a2.coeffs, &b2.coeffs, band, a.lattice.grid_m()))
        }
    }

    /// Coefficients `|k| ≤ band` of real samples on the lattice grid.
    pub fn from_physical(lattice: Lattice, band: usize, samples: &[f64]) -> Result<Self> {
        let m = lattice.grid_m();
        if m < 2 * band + 1 {
            return Err(Error::GridTooSmall {
                grid_m: m,
                band,
                required: 2 * band + 1,
            });
        }
        if samples.len() != m * m {
            return Err(Error::Config(format!(
                "expected {} samples, got {}",
                m * m,
                samples.len()
            )));
        }
        let mut f = Self::from_raw(lattice, band, fft::forward_real(samples, m, band));
        f.symmetrize();
        Ok(f)
    }

    pub fn from_physical_pair(
        lattice: Lattice,
        band: usize,
        a: &[f64],
        b: &[f64],
    ) -> Result<(Self, Self)> {
        let m = lattice.grid_m();
        if m < 2 * band + 1 {
            return Err(Error::GridTooSmall {
                grid_m: m,
                band,
                required: 2 * band + 1,
            });
        }
        let (ca, cb) = fft::forward_real_pair(a, b, m, band);
        let mut fa = Self::from_raw(lattice, band, ca);
        let mut fb = Self::from_raw(lattice, band, cb);
        fa.symmetrize();
        fb.symmetrize();
        Ok((fa, fb))
    }

    fn check_grid(&self) -> Result<()> {
        let m = self.lattice.grid_m();
        if m < 2 * self.band + 1 {
            return Err(Error::GridTooSmall {
                grid_m: m,
                band: self.band,
                required: 2 * self.band + 1,
            });
        }
        Ok(())
    }

    /// `Σ_k conj(a_k) b_k`; real for Hermitian fields.
    pub fn dot(&self, other: &Self) -> f64 {
        let b = self.band.min(other.band) as i64;
        let mut s = 0.0;
        for k1 in -b..=b {
            for k2 in -b..=b {
                let p = self.coeff(k1, k2).conj() * other.coeff(k1, k2);
                s += p.re;
            }
        }
        s
    }

    /// `Σ_k |c_k|²`.
    pub fn coeff_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `∫_{T²} |f|² = 4π² Σ_k |c_k|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        4.0 * PI * PI * self.coeff_norm_sq()
    }

    /// `∫_{T²} f = 4π² c_0`.
    pub fn integral(&self) -> f64 {
        4.0 * PI * PI * self.coeff(0, 0).re
    }

    /// `(Σ_k (1+|k|^{2α})^{s/α} |c_k|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let alpha = self.lattice.alpha();
        self.modes()
            .map(|((k1, k2), c)| jap_sq(alpha, k1, k2).powf(s / alpha) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    /// `self + a·other`, on the larger band.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let band = self.band.max(other.band);
        let mut out = self.with_band(band);
        let o = other.with_band(band);
        out.coeffs
            .iter_mut()
            .zip(&o.coeffs)
            .for_each(|(x, y)| *x += y * a);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Exactness;

    fn lat() -> Lattice {
        Lattice::new(6, 27, 0.9).unwrap()
    }

    #[test]
    fn project_boundary_included() {
        let f = SpectralField::mode(lat(), 6, (3, 4), Complex64::new(1.0, 0.0));
        assert_eq!(f.project(5).coeff(3, 4), Complex64::new(1.0, 0.0));
        assert_eq!(f.project(4).coeff_norm_sq(), 0.0);
        let g = SpectralField::mode(lat(), 3, (1, 2), Complex64::new(0.3, 0.1));
        assert_eq!(g.project(5), g);
    }

    #[test]
    fn multiplier_values() {
        let one = Complex64::new(1.0, 0.0);
        let z = SpectralField::mode(lat(), 6, (0, 0), one);
        let jz = z.multiplier(Multiplier::JapBracket, 0.9).unwrap();
        assert!((jz.coeff(0, 0).re - 1.0).abs() < 1e-15);
        let f1 = SpectralField::mode(lat(), 6, (1, 0), one);
        let j1 = f1.multiplier(Multiplier::JapBracket, 0.9).unwrap();
        assert!((j1.coeff(1, 0).re - 2f64.sqrt()).abs() < 1e-14);
        let f2 = SpectralField::mode(lat(), 6, (0, 2), one);
        let g2 = f2.multiplier(Multiplier::AbsGrad, 1.8).unwrap();
        assert!((g2.coeff(0, 2).re - 2f64.powf(1.8)).abs() < 1e-12);
        assert!((g2.coeff(0, 2).re - 3.4822).abs() < 1e-4);
        assert!(matches!(
            z.multiplier(Multiplier::AbsGrad, -0.5),
            Err(Error::NegativePowerAtZeroMode)
        ));
    }

    #[test]
    fn constant_and_cosine_samples() {
        let l = lat();
        let c = SpectralField::constant(l, 2.5);
        assert!(c.to_physical().unwrap().iter().all(|&x| (x - 2.5).abs() < 1e-14));
        let f = SpectralField::mode(l, 6, (2, -1), Complex64::new(0.5, 0.0));
        let x = f.to_physical().unwrap();
        let m = l.grid_m();
        let h = 2.0 * PI / m as f64;
        for i in 0..m {
            for j in 0..m {
                let want = (2.0 * i as f64 * h - j as f64 * h).cos();
                assert!((x[i * m + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sobolev_trivial_cases() {
        let l = lat();
        let z = SpectralField::mode(l, 6, (0, 0), Complex64::new(-0.7, 0.0));
        assert!((z.sobolev_norm(3.3) - 0.7).abs() < 1e-15);
        let f = SpectralField::mode(l, 6, (1, 0), Complex64::new(0.4, 0.0));
        // two conjugate modes, each weighted by 2^{α/α} = 2
        assert!((f.sobolev_norm(0.9) - (2.0 * 2.0 * 0.16f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn regrid_keeps_alpha() {
        let l = lat().regrid(6, Exactness::Full);
        assert!(l.grid_m() >= 73);
        assert_eq!(l.alpha(), 0.9);
    }
}

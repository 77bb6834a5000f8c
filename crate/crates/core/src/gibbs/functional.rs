use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::renorm::{hermite_all, hermite_coeffs, RenormTable};
use crate::spectral::SpectralField;

/// Which chaos components of the renormalised potential are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `V_N = Σ_{j≥1} ā_{j,N} N^{-(2j-4)β} H_{2j}`.
    Full,
    /// `V_N - ½ H_2`, the density of the measure preserved by the flow.
    Tilde,
    /// `Σ_{j≥2}`, the 2nd chaos removed.
    Chaos,
    /// `Σ_{j≥2} - ½ H_2`, the Gibbs weight used for partition functions.
    Measure,
}

impl Variant {
    fn includes_quadratic(self) -> bool {
        matches!(self, Variant::Full | Variant::Tilde)
    }

    fn subtracts_mass(self) -> bool {
        matches!(self, Variant::Tilde | Variant::Measure)
    }
}

/// Which averaged coefficients feed the Wick expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffSource {
    /// `ā_{j,N}`.
    Truncated,
    /// `ā_j`, frozen at their limits.
    Limit,
}

/// `F(φ) = ∫ Σ_l w_l H_l(φ(x); v) dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WickFunctional {
    pub weights: Vec<f64>,
    pub var: f64,
    monomial: Vec<f64>,
}

impl WickFunctional {
    pub fn new(weights: Vec<f64>, var: f64) -> Self {
        let mut monomial = vec![0.0; weights.len()];
        for (l, w) in weights.iter().enumerate() {
            if *w != 0.0 {
                for (p, c) in hermite_coeffs(l, var).iter().enumerate() {
                    monomial[p] += w * c;
                }
            }
        }
        Self {
            weights,
            var,
            monomial,
        }
    }

    pub fn from_table(table: &RenormTable, variant: Variant, source: CoeffSource) -> Self {
        let m = table.m();
        let mut w = vec![0.0; 2 * m.max(1) + 1];
        let j0 = if variant.includes_quadratic() { 1 } else { 2 };
        for j in j0..=m {
            w[2 * j] = match source {
                CoeffSource::Truncated => table.wick_coeff(j),
                CoeffSource::Limit => table.wick_coeff_limit(j),
            };
        }
        if variant.subtracts_mass() {
            w[2] -= 0.5;
        }
        Self::new(w, table.sigma_tilde_n_sq)
    }

    /// `λ ∫ φ⋄4 - ½ ∫ φ⋄2` with Wick powers at variance `var`.
    pub fn limit_density(lambda: f64, var: f64) -> Self {
        Self::new(vec![0.0, 0.0, -0.5, 0.0, lambda], var)
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0], 0.0)
    }

    pub fn degree(&self) -> usize {
        self.weights
            .iter()
            .rposition(|w| *w != 0.0)
            .unwrap_or(0)
    }

    /// Pointwise value `Σ_l w_l H_l(x; v)`.
    pub fn density(&self, x: f64) -> f64 {
        self.monomial.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `∫` of the density from grid samples with cell area `area`.
    pub fn integral_from_samples(&self, x: &[f64], area: f64) -> f64 {
        let mut s = 0.0;
        for &v in x {
            s += self.density(v);
        }
        s * area
    }

    pub fn integral(&self, phi: &SpectralField) -> Result<f64> {
        let d = self.degree();
        if !grid_ok(phi, d) {
            return Err(too_small(phi, d));
        }
        let x = phi.to_physical()?;
        Ok(self.integral_from_samples(&x, phi.lattice().cell_area()))
    }

    /// Coefficients `e_p` of `F(c + φ_rest) = Σ_p e_p c^p` given the chaos
    /// integrals `m_i = ∫ H_i(φ_rest; v)` for `i ≤ degree`.
    pub fn zero_mode_poly(&self, chaos: &[f64]) -> Vec<f64> {
        let d = self.degree();
        let mut e = vec![0.0; d + 1];
        for l in 0..=d {
            let w = self.weights[l];
            if w == 0.0 {
                continue;
            }
            // H_l(c + y; v) = Σ_i C(l, i) H_i(y; v) c^{l-i}
            let mut binom = 1.0;
            for i in 0..=l {
                e[l - i] += w * binom * chaos[i];
                binom = binom * (l - i) as f64 / (i + 1) as f64;
            }
        }
        e
    }
}

/// `∫ H_i(φ(x); v) dx` for `i = 0..=d` from grid samples.
pub fn chaos_integrals(x: &[f64], var: f64, d: usize, area: f64) -> Vec<f64> {
    let mut acc = vec![0.0; d + 1];
    let mut h = vec![0.0; d + 1];
    for &v in x {
        hermite_all(d, v, var, &mut h);
        for (a, hv) in acc.iter_mut().zip(&h) {
            *a += hv;
        }
    }
    acc.iter_mut().for_each(|a| *a *= area);
    acc
}

pub(crate) fn grid_ok(phi: &SpectralField, degree: usize) -> bool {
    phi.lattice().grid_m() > degree.max(2) * phi.band()
}

pub(crate) fn too_small(phi: &SpectralField, degree: usize) -> Error {
    Error::GridTooSmall {
        grid_m: phi.lattice().grid_m(),
        band: phi.band(),
        required: degree.max(2) * phi.band() + 1,
    }
}

/// `∫_{T²} V(Π_N φ) dx` for the chosen variant, exact on an adequate grid.
pub fn potential_integral(phi: &SpectralField, table: &RenormTable, variant: Variant) -> Result<f64> {
    let f = WickFunctional::from_table(table, variant, CoeffSource::Truncated);
    let projected = phi.project(table.n);
    f.integral(&projected)
}

/// Coercivity of the constant-field polynomial
/// `P(U) = Σ_{j≥2} ā_{j,N} N^{-(2j-4)β} U^{2j} - U²` against
/// `c (U⁴ + N^{-(2m-4)β} U^{2m}) - C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityFit {
    pub c: f64,
    pub big_c: f64,
    pub u_max: f64,
}

pub fn coercivity_fit(table: &RenormTable, u_max: f64, points: usize) -> CoercivityFit {
    let m = table.m();
    let beta = table.beta();
    let n = table.n as f64;
    let top = n.powf(-((2 * m) as f64 - 4.0) * beta);
    let higher = |u: f64| -> f64 {
        (2..=m).map(|j| table.wick_coeff(j) * u.powi(2 * j as i32)).sum()
    };
    let envelope = |u: f64| u.powi(4) + if m > 2 { top * u.powi(2 * m as i32) } else { 0.0 };
    let grid: Vec<f64> = (1..=points).map(|i| u_max * i as f64 / points as f64).collect();
    let c = 0.5
        * grid
            .iter()
            .map(|&u| higher(u) / envelope(u))
            .fold(f64::INFINITY, f64::min);
    let big_c = grid
        .iter()
        .map(|&u| c * envelope(u) - (higher(u) - u * u))
        .fold(0.0, f64::max);
    CoercivityFit { c, big_c, u_max }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renorm::{hermite, Preset};

    #[test]
    fn zero_mode_poly_matches_direct() {
        let f = WickFunctional::new(vec![0.0, 0.0, -0.5, 0.0, 0.3, 0.0, 0.02], 0.6);
        let ys = [0.3, -1.1, 0.7, 2.0];
        let area = 0.25;
        let chaos = chaos_integrals(&ys, 0.6, 6, area);
        let e = f.zero_mode_poly(&chaos);
        for c in [-0.8, 0.0, 0.45] {
            let direct: f64 = ys
                .iter()
                .map(|y| {
                    f.weights
                        .iter()
                        .enumerate()
                        .map(|(l, w)| w * hermite(l, c + y, 0.6))
                        .sum::<f64>()
                })
                .sum::<f64>()
                * area;
            let poly: f64 = e.iter().rev().fold(0.0, |a, b| a * c + b);
            assert!((direct - poly).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn coercivity_of_presets() {
        let spec = Preset::TunedSextic.spec(0.9);
        let t = RenormTable::new(&spec, 0.9, 32).unwrap();
        let fit = coercivity_fit(&t, 20.0, 2000);
        assert!(fit.c > 0.0 && fit.big_c.is_finite());
    }
}

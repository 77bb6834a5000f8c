//! Variational upper bounds on `-log Z_N` from deterministic drifts.
//!
//! For a time-constant drift `v` the shifted field is `U = S_N v`, with
//! `Û_k = v̂_k (1+|k|^{2α})^{-1/2}` for `|k| ≤ N`. Since `E H_n(W + U; σ̃²)
//! = U^n` when `W` has pointwise variance `σ̃²`, the objective is
//!
//! `∫ P(U(x)) dx + ½·4π² Σ_k |v̂_k|²`, `P(u) = Σ_{j≥2} ā_{j,N}N^{-(2j-4)β} u^{2j} - ½u²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::renorm::RenormTable;
use crate::sampling::mode_order;
use crate::spectral::{jap_sq, Exactness, Lattice, SpectralField};

/// Default drift band `min(N, 8)`.
pub fn default_drift_band(n: usize) -> usize {
    n.min(8)
}

/// Time-constant real drift on the modes `|k| ≤ band`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftProfile {
    pub band: usize,
    /// `[v̂_0, Re v̂_k, Im v̂_k, ...]` over the half-lattice in sampling order.
    pub params: Vec<f64>,
}

impl DriftProfile {
    pub fn zero(band: usize) -> Self {
        Self {
            band,
            params: vec![0.0; Self::dim(band)],
        }
    }

    pub fn dim(band: usize) -> usize {
        1 + 2 * mode_order(band).len()
    }

    /// Spatially constant drift `v ≡ value`.
    pub fn constant(band: usize, value: f64) -> Self {
        let mut d = Self::zero(band);
        d.params[0] = value;
        d
    }

    pub fn from_params(band: usize, params: Vec<f64>) -> Result<Self> {
        if params.len() != Self::dim(band) {
            return Err(Error::Config(format!(
                "drift of band {band} needs {} parameters, got {}",
                Self::dim(band),
                params.len()
            )));
        }
        Ok(Self { band, params })
    }

    /// Fourier coefficients of `v`.
    pub fn to_field(&self, lattice: Lattice) -> SpectralField {
        let mut f = SpectralField::zeros(lattice, self.band);
        f.set_pair(0, 0, Complex64::new(self.params[0], 0.0));
        for (i, &(k1, k2)) in mode_order(self.band).iter().enumerate() {
            f.set_pair(
                k1,
                k2,
                Complex64::new(self.params[1 + 2 * i], self.params[2 + 2 * i]),
            );
        }
        f
    }

    /// `∫_{T²} |v|² = 4π² Σ_k |v̂_k|²`.
    pub fn energy(&self) -> f64 {
        let pairs: f64 = self.params[1..].iter().map(|x| x * x).sum();
        4.0 * PI * PI * (self.params[0] * self.params[0] + 2.0 * pairs)
    }

    pub fn neg(&self) -> Self {
        Self {
            band: self.band,
            params: self.params.iter().map(|x| -x).collect(),
        }
    }
}

/// `U_N = S_N v` on `lattice`, cut at `|k| ≤ n`.
pub fn shifted_field(drift: &DriftProfile, lattice: Lattice, n: usize) -> SpectralField {
    let alpha = lattice.alpha();
    drift
        .to_field(lattice)
        .project(n)
        .map_symbol(|k1, k2| jap_sq(alpha, k1, k2).powf(-0.5))
}

/// `P(u)` and `P'(u)` for the table.
struct ShiftPolynomial {
    coeffs: Vec<f64>,
}

impl ShiftPolynomial {
    fn new(table: &RenormTable) -> Self {
        let m = table.m();
        let mut coeffs = vec![0.0; 2 * m.max(1) + 1];
        for j in 2..=m {
            coeffs[2 * j] = table.wick_coeff(j);
        }
        coeffs[2] -= 0.5;
        Self { coeffs }
    }

    fn value(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |a, c| a * u + c)
    }

    fn derivative(&self, u: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |a, (p, c)| a * u + p as f64 * c)
    }

    fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

fn drift_lattice(table: &RenormTable, band: usize, degree: usize) -> Result<Lattice> {
    if band > table.n {
        return Err(Error::Config(format!(
            "drift band {band} exceeds N = {}",
            table.n
        )));
    }
    Lattice::for_degree(band.max(1), table.alpha, degree, Exactness::Integral)
}

/// `E ∫Ṽ_N(W_N + U_N) + ½∫|v|²` for the measure variant.
pub fn objective(drift: &DriftProfile, table: &RenormTable) -> Result<f64> {
    let p = ShiftPolynomial::new(table);
    let lat = drift_lattice(table, drift.band, p.degree())?;
    let u = shifted_field(drift, lat, table.n).to_physical()?;
    let area = lat.cell_area();
    let pot: f64 = u.iter().map(|&x| p.value(x)).sum::<f64>() * area;
    Ok(pot + 0.5 * drift.energy())
}

/// Objective and its gradient with respect to `params`.
pub fn objective_grad(drift: &DriftProfile, table: &RenormTable) -> Result<(f64, Vec<f64>)> {
    let p = ShiftPolynomial::new(table);
    let lat = drift_lattice(table, drift.band, p.degree())?;
    let u = shifted_field(drift, lat, table.n).to_physical()?;
    let area = lat.cell_area();
    let pot: f64 = u.iter().map(|&x| p.value(x)).sum::<f64>() * area;
    let dp: Vec<f64> = u.iter().map(|&x| p.derivative(x)).collect();
    let fhat = SpectralField::from_physical(lat, drift.band, &dp)?;
    let alpha = table.alpha;
    let four_pi2 = 4.0 * PI * PI;
    let mut g = vec![0.0; drift.params.len()];
    g[0] = four_pi2 * fhat.coeff(0, 0).re + four_pi2 * drift.params[0];
    for (i, &(k1, k2)) in mode_order(drift.band).iter().enumerate() {
        let c = fhat.coeff(k1, k2);
        let s = if (k1 * k1 + k2 * k2) as usize <= table.n * table.n {
            jap_sq(alpha, k1, k2).powf(-0.5)
        } else {
            0.0
        };
        g[1 + 2 * i] = 2.0 * four_pi2 * (c.re * s + drift.params[1 + 2 * i]);
        g[2 + 2 * i] = 2.0 * four_pi2 * (c.im * s + drift.params[2 + 2 * i]);
    }
    Ok((pot + 0.5 * drift.energy(), g))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub shrink: f64,
    pub initial_step: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            grad_tol: 1e-8,
            armijo_c: 1e-4,
            shrink: 0.5,
            initial_step: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub drift: DriftProfile,
    /// Upper bound on `-log Z_N`.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

const MIN_STEP: f64 = 1e-20;

/// Gradient descent with Armijo backtracking. The returned value never
/// exceeds `objective(init)`.
pub fn minimize(table: &RenormTable, init: &DriftProfile, opts: &MinimizeOptions) -> Result<Minimum> {
    let mut x = init.clone();
    let (mut f, mut g) = objective_grad(&x, table)?;
    let mut step = opts.initial_step;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut it = 0;
    while it < opts.max_iterations {
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        let gn = gn2.sqrt();
        trace.push(TraceRow {
            iteration: it,
            objective: f,
            grad_norm: gn,
            step,
        });
        if gn <= opts.grad_tol {
            converged = true;
            break;
        }
        let mut t = step;
        let accepted = loop {
            let cand = DriftProfile {
                band: x.band,
                params: x.params.iter().zip(&g).map(|(a, b)| a - t * b).collect(),
            };
            let fc = objective(&cand, table)?;
            if fc.is_finite() && fc <= f - opts.armijo_c * t * gn2 {
                break Some((cand, t));
            }
            t *= opts.shrink;
            if t < MIN_STEP {
                break None;
            }
        };
        it += 1;
        match accepted {
            Some((cand, t)) => {
                x = cand;
                (f, g) = objective_grad(&x, table)?;
                step = (2.0 * t).min(1e3);
            }
            None => {
                converged = true;
                break;
            }
        }
    }
    Ok(Minimum {
        drift: x,
        objective: f,
        converged,
        iterations: it,
        trace,
    })
}

/// `‖I_N(f)‖²_{H^α} / ∫|f|²` with `⟨k⟩ = (1+|k|²)^{1/2}`.
pub fn cameron_martin_ratio(drift: &DriftProfile, table: &RenormTable) -> f64 {
    let lat = Lattice::new(drift.band.max(1), 2 * drift.band.max(1) + 1, table.alpha)
        .expect("band-sized lattice");
    let u = shifted_field(drift, lat, table.n);
    let alpha = table.alpha;
    let h: f64 = u
        .modes()
        .map(|((k1, k2), c)| (1.0 + (k1 * k1 + k2 * k2) as f64).powf(alpha) * c.norm_sqr())
        .sum::<f64>()
        * 4.0
        * PI
        * PI;
    h / drift.energy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renorm::Preset;

    #[test]
    fn zero_drift_is_zero() {
        let spec = Preset::TunedSextic.spec(0.9);
        let t = RenormTable::new(&spec, 0.9, 16).unwrap();
        assert_eq!(objective(&DriftProfile::zero(8), &t).unwrap(), 0.0);
    }

    #[test]
    fn constant_drift_energy_cancels_mass() {
        let spec = Preset::ViolatingSextic.spec(0.9);
        let t = RenormTable::new(&spec, 0.9, 32).unwrap();
        let u = 1.3;
        let got = objective(&DriftProfile::constant(4, u), &t).unwrap();
        let want: f64 = 4.0 * PI * PI * (2..=3).map(|j| t.wick_coeff(j) * u.powi(2 * j as i32)).sum::<f64>();
        assert!((got - want).abs() < 1e-10 * want.abs());
    }

    #[test]
    fn first_shell_scaled() {
        let lat = Lattice::new(2, 5, 0.9).unwrap();
        let mut d = DriftProfile::zero(2);
        let i = mode_order(2).iter().position(|&k| k == (1, 0)).unwrap();
        d.params[1 + 2 * i] = 1.0;
        let u = shifted_field(&d, lat, 2);
        assert!((u.coeff(1, 0).re - 0.5f64.sqrt()).abs() < 1e-15);
    }
}

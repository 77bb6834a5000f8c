//! Deterministic lattice sums behind the harmonic-analysis lemmas: the
//! dispersive kernel of one Littlewood–Paley block, discrete convolution
//! bounds, and exact second moments of Wick powers of the truncated field.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    inverse, jap_sq, lp_bump, required_grid, smooth_odd_at_least, Exactness, Lattice,
    SpectralField,
};
use crate::stats::{dyadic_saturation, linear_fit, LinearFit, NeumaierSum, Saturation};

/// Points per dimension of the `z` grid on which the kernel sup is taken.
pub const KERNEL_Z_GRID: usize = 128;

/// `sup_z |K_j(t, z)|` on the documented grid and on the full FFT grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSup {
    pub j: u32,
    pub t: f64,
    pub sup: f64,
    /// Sup over every point of the transform grid (a refinement of `sup`).
    pub sup_fine: f64,
    /// `Σ_k φ_j(k)`, the value at `t = 0`.
    pub mass: f64,
}

/// `K_j(t, z) = Σ_k φ_j(k) e^{it√(1+|k|^{2α}) + ik·z}`.
pub fn dispersive_kernel(j: u32, t: f64, alpha: f64) -> KernelSup {
    let r = (8.0 / 3.0 * 2f64.powi(j as i32)).ceil() as usize;
    let m = KERNEL_Z_GRID * (2 * r + 1).div_ceil(KERNEL_Z_GRID);
    let b = r as i64;
    let mut coeffs = Vec::with_capacity((2 * r + 1).pow(2));
    let mut mass = 0.0;
    for k1 in -b..=b {
        for k2 in -b..=b {
            let w = lp_bump(j as i32, ((k1 * k1 + k2 * k2) as f64).sqrt());
            mass += w;
            let phase = t * jap_sq(alpha, k1, k2).sqrt();
            coeffs.push(Complex64::from_polar(w, phase));
        }
    }
    let z = inverse(&coeffs, r, m);
    let stride = m / KERNEL_Z_GRID;
    let mut sup = 0.0f64;
    let mut sup_fine = 0.0f64;
    for (i, c) in z.iter().enumerate() {
        let a = c.norm();
        sup_fine = sup_fine.max(a);
        if (i / m) % stride == 0 && (i % m) % stride == 0 {
            sup = sup.max(a);
        }
    }
    KernelSup {
        j,
        t,
        sup,
        sup_fine,
        mass,
    }
}

/// `C_j = max_t sup_z|K_j| · t / 2^{j(2-α)}` for each block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDecay {
    pub alpha: f64,
    pub samples: Vec<KernelSup>,
    pub constants: Vec<(u32, f64)>,
    /// `max C_j / min C_j`.
    pub spread: f64,
    /// Largest relative change of the sup between the two grids.
    pub refinement: f64,
}

pub fn kernel_decay(alpha: f64, blocks: &[u32], times: &[f64]) -> KernelDecay {
    let tasks: Vec<(u32, f64)> = blocks
        .iter()
        .flat_map(|&j| times.iter().map(move |&t| (j, t)))
        .collect();
    let samples: Vec<KernelSup> = tasks
        .par_iter()
        .map(|&(j, t)| dispersive_kernel(j, t, alpha))
        .collect();
    let constants: Vec<(u32, f64)> = blocks
        .iter()
        .map(|&j| {
            let c = samples
                .iter()
                .filter(|s| s.j == j)
                .map(|s| s.sup * s.t.abs() / 2f64.powf(j as f64 * (2.0 - alpha)))
                .fold(0.0, f64::max);
            (j, c)
        })
        .collect();
    let hi = constants.iter().map(|c| c.1).fold(0.0, f64::max);
    let lo = constants.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let refinement = samples
        .iter()
        .map(|s| (s.sup_fine - s.sup) / s.sup_fine)
        .fold(0.0, f64::max);
    KernelDecay {
        alpha,
        samples,
        constants,
        spread: hi / lo,
        refinement,
    }
}

/// Which part of the discrete convolution lemma is probed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvolutionCase {
    /// `η₂ < 2`: envelope `⟨k₀⟩^{-(η₁+η₂-2)}`.
    I { eta1: f64, eta2: f64 },
    /// `η₂ = 2`: envelope `log(2+|k₀|)/⟨k₀⟩^{η₁}`.
    II { eta1: f64 },
    /// `η₂ > 2`: envelope `⟨k₀⟩^{-η₁}`.
    III { eta1: f64, eta2: f64 },
    /// `n`-fold self-convolution of `⟨k⟩^{-η}`, `(n-1)·2/n < η < 2`:
    /// envelope `⟨k⟩^{-(nη-2(n-1))}`.
    IV { n: usize, eta: f64 },
}

impl ConvolutionCase {
    pub fn name(&self) -> &'static str {
        match self {
            ConvolutionCase::I { .. } => "i",
            ConvolutionCase::II { .. } => "ii",
            ConvolutionCase::III { .. } => "iii",
            ConvolutionCase::IV { .. } => "iv",
        }
    }

    fn check(&self) -> Result<()> {
        const D: f64 = 2.0;
        let fail = |reason: String| {
            Err(Error::ConditionViolated {
                case: self.name(),
                reason,
            })
        };
        match *self {
            ConvolutionCase::I { eta1, eta2 } => {
                pair_check(eta1, eta2).or_else(fail)?;
                if eta2 >= D {
                    return fail(format!("η₂ = {eta2} must be below 2"));
                }
                Ok(())
            }
            ConvolutionCase::II { eta1 } => pair_check(eta1, D).or_else(fail),
            ConvolutionCase::III { eta1, eta2 } => {
                pair_check(eta1, eta2).or_else(fail)?;
                if eta2 <= D {
                    return fail(format!("η₂ = {eta2} must exceed 2"));
                }
                Ok(())
            }
            ConvolutionCase::IV { n, eta } => {
                if !(2..=3).contains(&n) {
                    return fail(format!("n = {n} must be 2 or 3"));
                }
                let lo = (n as f64 - 1.0) * D / n as f64;
                if !(eta > lo && eta < D) {
                    return fail(format!("η = {eta} must lie in ({lo}, 2)"));
                }
                Ok(())
            }
        }
    }

    fn envelope(&self, k0: f64) -> f64 {
        let br = (1.0 + k0 * k0).sqrt();
        match *self {
            ConvolutionCase::I { eta1, eta2 } => br.powf(-(eta1 + eta2 - 2.0)),
            ConvolutionCase::II { eta1 } => (2.0 + k0).ln() * br.powf(-eta1),
            ConvolutionCase::III { eta1, .. } => br.powf(-eta1),
            ConvolutionCase::IV { n, eta } => br.powf(-(n as f64 * eta - 2.0 * (n as f64 - 1.0))),
        }
    }
}

fn pair_check(eta1: f64, eta2: f64) -> std::result::Result<(), String> {
    if !(0.0 <= eta1 && eta1 <= eta2) {
        return Err(format!("need 0 ≤ η₁ ≤ η₂, got {eta1}, {eta2}"));
    }
    if eta1 + eta2 <= 2.0 {
        return Err(format!("η₁ + η₂ = {} must exceed 2", eta1 + eta2));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionReport {
    pub case: ConvolutionCase,
    pub truncation: usize,
    pub k0: Vec<usize>,
    pub sums: Vec<f64>,
    pub envelope: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Saturation of the ratio along the dyadic part of the `k₀` grid.
    pub saturation: Saturation,
    /// `log sum` against `log⟨k₀⟩` over `k₀ ≥ 2`.
    pub fit: Option<LinearFit>,
    /// Size of the analytic correction for `|k| > truncation`.
    pub tail: f64,
}

fn bracket_pow(k1: i64, k2: i64, eta: f64) -> f64 {
    (1.0 + (k1 * k1 + k2 * k2) as f64).powf(-0.5 * eta)
}

/// `Σ_{|k|≤T} ⟨k⟩^{-η₁}⟨k-k₀⟩^{-η₂}` plus the leading far-field term, for
/// `k₀ = (k0, 0)`.
fn pair_sum(eta1: f64, eta2: f64, t: usize, k0: i64) -> (f64, f64) {
    let b = t as i64;
    let mut s = NeumaierSum::default();
    for k1 in -b..=b {
        for k2 in -b..=b {
            if k1 * k1 + k2 * k2 <= b * b {
                s.add(bracket_pow(k1, k2, eta1) * bracket_pow(k1 - k0, k2, eta2));
            }
        }
    }
    let e = eta1 + eta2 - 2.0;
    let tail = 2.0 * PI * (t as f64).powf(-e) / e;
    (s.total() + tail, tail)
}

/// `n`-fold convolution of `⟨k⟩^{-η}1_{|k|≤T}` evaluated at `(k0, 0)`.
fn self_convolution(n: usize, eta: f64, t: usize, k0: &[usize]) -> Result<(Vec<f64>, f64)> {
    let m = smooth_odd_at_least(required_grid(t, n, Exactness::Full));
    // the dispersion exponent of the lattice plays no role here
    let lat = Lattice::new(t, m, 0.75)?;
    let f = SpectralField::from_fn(lat, t, |k1, k2| Complex64::new(bracket_pow(k1, k2, eta), 0.0));
    let x = f.to_physical()?;
    let p: Vec<f64> = x.iter().map(|v| v.powi(n as i32)).collect();
    let c = SpectralField::from_physical(lat, n * t, &p)?;
    // far field: one summand beyond T forces the others to be comparable
    let tail = 2.0 * PI * (t as f64).powf(2.0 - n as f64 * eta) / (n as f64 * eta - 2.0);
    Ok((k0.iter().map(|&k| c.coeff(k as i64, 0).re + tail).collect(), tail))
}

/// Brute-force lattice sums of the convolution lemma against its envelope.
pub fn convolution_sum_oracle(
    case: ConvolutionCase,
    k0_grid: &[usize],
    truncation: usize,
) -> Result<ConvolutionReport> {
    case.check()?;
    let (sums, tail) = match case {
        ConvolutionCase::I { eta1, eta2 } | ConvolutionCase::III { eta1, eta2 } => {
            let v: Vec<(f64, f64)> = k0_grid
                .par_iter()
                .map(|&k| pair_sum(eta1, eta2, truncation, k as i64))
                .collect();
            let tail = v.first().map(|x| x.1).unwrap_or(0.0);
            (v.into_iter().map(|x| x.0).collect(), tail)
        }
        ConvolutionCase::II { eta1 } => {
            let v: Vec<(f64, f64)> = k0_grid
                .par_iter()
                .map(|&k| pair_sum(eta1, 2.0, truncation, k as i64))
                .collect();
            let tail = v.first().map(|x| x.1).unwrap_or(0.0);
            (v.into_iter().map(|x| x.0).collect(), tail)
        }
        ConvolutionCase::IV { n, eta } => self_convolution(n, eta, truncation, k0_grid)?,
    };
    let envelope: Vec<f64> = k0_grid.iter().map(|&k| case.envelope(k as f64)).collect();
    let ratios: Vec<f64> = sums.iter().zip(&envelope).map(|(s, e)| s / e).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let dyadic: Vec<f64> = k0_grid
        .iter()
        .zip(&ratios)
        .filter(|(k, _)| k.is_power_of_two())
        .map(|(_, r)| *r)
        .collect();
    let pts: Vec<(f64, f64)> = k0_grid
        .iter()
        .zip(&sums)
        .filter(|(k, _)| **k >= 2)
        .map(|(&k, &s)| ((1.0 + (k * k) as f64).sqrt().ln(), s.ln()))
        .collect();
    let fit = (pts.len() >= 2).then(|| {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        linear_fit(&x, &y)
    });
    Ok(ConvolutionReport {
        case,
        truncation,
        k0: k0_grid.to_vec(),
        sums,
        envelope,
        ratios,
        max_ratio,
        saturation: dyadic_saturation(&dyadic),
        fit,
        tail,
    })
}

/// `ρ_N(k) = 1_{|k|≤N} / (4π²(1+|k|^{2α}))`, the covariance of `Π_N φ`.
fn covariance(lat: Lattice, n: usize) -> SpectralField {
    let alpha = lat.alpha();
    SpectralField::from_fn(lat, n, |k1, k2| {
        Complex64::new(1.0 / (4.0 * PI * PI * jap_sq(alpha, k1, k2)), 0.0)
    })
}

/// `ρ^{*l}` for a field `ρ` given on `band`, on a grid exact for the power.
fn convolution_power(rho: &SpectralField, l: usize) -> Result<SpectralField> {
    let x = rho.to_physical()?;
    let p: Vec<f64> = x.iter().map(|v| v.powi(l as i32)).collect();
    SpectralField::from_physical(*rho.lattice(), l * rho.band(), &p)
}

fn power_lattice(alpha: f64, band: usize, l: usize) -> Result<Lattice> {
    Lattice::new(
        band,
        smooth_odd_at_least(required_grid(band, l, Exactness::Full)),
        alpha,
    )
}

/// `Σ_k (1+|k|^{2α})^{-σ/α} a_k`.
fn weighted_sum(a: &SpectralField, sigma: f64) -> f64 {
    let alpha = a.lattice().alpha();
    let mut s = NeumaierSum::default();
    for ((k1, k2), c) in a.modes() {
        s.add(jap_sq(alpha, k1, k2).powf(-sigma / alpha) * c.re);
    }
    s.total()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `E ‖H_n(Π_N φ; σ̃_N²)‖²_{H^{-σ}} = n! Σ_k (1+|k|^{2α})^{-σ/α} ρ_N^{*n}(k)`.
pub fn wick_moment(alpha: f64, n: usize, power: usize, sigma: f64) -> Result<f64> {
    let lat = power_lattice(alpha, n, power)?;
    let rho = covariance(lat, n);
    Ok(factorial(power) * weighted_sum(&convolution_power(&rho, power)?, sigma))
}

/// `E ‖φ_N^{⋄l} - φ_{2N}^{⋄l}‖²_{H^{-s}} = l! Σ_k w(k)(ρ_{2N}^{*l} - ρ_N^{*l})(k)`.
pub fn wick_difference(alpha: f64, n: usize, l: usize, s: f64) -> Result<f64> {
    let lat = power_lattice(alpha, 2 * n, l)?;
    let big = convolution_power(&covariance(lat, 2 * n), l)?;
    let small = convolution_power(&covariance(lat, n), l)?;
    Ok(factorial(l) * (weighted_sum(&big, s) - weighted_sum(&small, s)))
}

/// Values along an `N` ladder with a power-law fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub n: Vec<usize>,
    pub values: Vec<f64>,
    pub fit: LinearFit,
    pub saturation: Saturation,
}

impl Ladder {
    fn new(n: &[usize], values: Vec<f64>) -> Self {
        let x: Vec<f64> = n.iter().map(|v| (*v as f64).ln()).collect();
        let y: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
        Self {
            n: n.to_vec(),
            fit: linear_fit(&x, &y),
            saturation: dyadic_saturation(&values),
            values,
        }
    }
}

/// Wick power moments `E‖φ_N^{⋄n}‖²_{H^{-σ}}` along `ladder`.
pub fn wick_moment_ladder(alpha: f64, power: usize, sigma: f64, ladder: &[usize]) -> Result<Ladder> {
    let v: Vec<f64> = ladder
        .par_iter()
        .map(|&n| wick_moment(alpha, n, power, sigma))
        .collect::<Result<_>>()?;
    Ok(Ladder::new(ladder, v))
}

/// Chaos differences at `s = l(1-α) + ε` along `ladder`.
pub fn wick_difference_ladder(alpha: f64, l: usize, eps: f64, ladder: &[usize]) -> Result<Ladder> {
    let s = l as f64 * (1.0 - alpha) + eps;
    let v: Vec<f64> = ladder
        .par_iter()
        .map(|&n| wick_difference(alpha, n, l, s))
        .collect::<Result<_>>()?;
    Ok(Ladder::new(ladder, v))
}

/// `Σ ⟨k₁+…+k_l⟩^{-2γ} Π ⟨k_i⟩^{-2α}` with `N < |k_i| ≤ M` for the first
/// `j` indices and `|k_i| ≤ M` for the rest, `γ = l(1-α) + ε`.
pub fn corollary_sum(alpha: f64, eps: f64, l: usize, j: usize, n: usize, m: usize) -> Result<f64> {
    if j == 0 || j > l || n >= m {
        return Err(Error::Config(format!("need 1 ≤ j ≤ l and N < M, got j={j}, l={l}, N={n}, M={m}")));
    }
    let lat = power_lattice(alpha, m, l)?;
    let full = covariance(lat, m).scale(4.0 * PI * PI);
    let outer = full.sub(&full.project(n));
    let xo = outer.to_physical()?;
    let xf = full.to_physical()?;
    let p: Vec<f64> = xo
        .iter()
        .zip(&xf)
        .map(|(a, b)| a.powi(j as i32) * b.powi((l - j) as i32))
        .collect();
    let c = SpectralField::from_physical(lat, l * m, &p)?;
    let gamma = l as f64 * (1.0 - alpha) + eps;
    Ok(weighted_sum(&c, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_at_time_zero_is_mass() {
        let k = dispersive_kernel(2, 0.0, 0.9);
        assert!((k.sup_fine - k.mass).abs() < 1e-9 * k.mass);
    }

    #[test]
    fn case_conditions() {
        assert!(convolution_sum_oracle(ConvolutionCase::I { eta1: 1.0, eta2: 2.5 }, &[0], 4).is_err());
        assert!(convolution_sum_oracle(ConvolutionCase::IV { n: 2, eta: 0.9 }, &[0], 4).is_err());
    }

    #[test]
    fn first_chaos_moment_is_plain_sum() {
        let want: f64 = crate::spectral::ball(4)
            .map(|(a, b)| jap_sq(0.9, a, b).powf(-0.5 / 0.9) / (4.0 * PI * PI * jap_sq(0.9, a, b)))
            .sum();
        assert!((wick_moment(0.9, 4, 1, 0.5).unwrap() - want).abs() < 1e-12 * want);
    }
}

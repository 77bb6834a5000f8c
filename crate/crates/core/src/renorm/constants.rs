use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::potential::PotentialSpec;
use crate::error::{Error, Result};
use crate::stats::NeumaierSum;

/// `σ² = 1/(4π(1-α))`.
pub fn sigma_sq(alpha: f64) -> f64 {
    1.0 / (4.0 * PI * (1.0 - alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaConstants {
    pub sigma_sq: f64,
    pub sigma_n_sq: f64,
    pub sigma_tilde_n_sq: f64,
}

/// `(1/4π²) Σ_{|k|≤N} 1/(1+|k|^{2α})`, the pointwise variance of `Π_N φ`.
pub fn sigma_tilde_sq(alpha: f64, n: usize) -> f64 {
    let b = n as i64;
    let mut s = NeumaierSum::default();
    for k1 in -b..=b {
        for k2 in -b..=b {
            let r2 = k1 * k1 + k2 * k2;
            if r2 <= b * b {
                s.add(1.0 / (1.0 + (r2 as f64).powf(alpha)));
            }
        }
    }
    s.total() / (4.0 * PI * PI)
}

pub fn sigma_constants(alpha: f64, n: usize) -> Result<SigmaConstants> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if n == 0 {
        return Err(Error::ZeroCutoff);
    }
    let st = sigma_tilde_sq(alpha, n);
    Ok(SigmaConstants {
        sigma_sq: sigma_sq(alpha),
        sigma_n_sq: st / (n as f64).powf(2.0 * (1.0 - alpha)),
        sigma_tilde_n_sq: st,
    })
}

/// `b̄₁` with the size of the analytic tail correction and the change
/// under doubling of the cell quadrature order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B1Estimate {
    pub value: f64,
    pub tail_bound: f64,
    pub quad_delta: f64,
    pub truncation: usize,
    pub order: usize,
}

/// `∫_{[0,1]²} |ξ|^{-2α} dξ` in polar coordinates: the radial integral is
/// explicit and the angular one uses Gauss–Legendre on `[0, π/4]`.
fn corner_cell_integral(alpha: f64) -> f64 {
    let gl = GaussLegendre::new(NonZeroUsize::new(48).unwrap());
    let e = 2.0 - 2.0 * alpha;
    2.0 * gl.integrate(0.0, PI / 4.0, |t| (1.0 / t.cos()).powf(e) / e)
}

fn cell_sum(alpha: f64, truncation: usize, order: usize) -> f64 {
    let gl = GaussLegendre::new(NonZeroUsize::new(order).expect("order ≥ 1"));
    let nw: Vec<(f64, f64)> = gl
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let corner = corner_cell_integral(alpha);
    let t = truncation as i64;
    let mut s = NeumaierSum::default();
    for a in -t..=t {
        for b in -t..=t {
            let r2 = a * a + b * b;
            if r2 > t * t {
                continue;
            }
            let lattice_term = if r2 == 0 {
                0.0
            } else {
                1.0 / (1.0 + (r2 as f64).powf(alpha))
            };
            let touches_origin = (a == 0 || a == -1) && (b == 0 || b == -1);
            let cell = if touches_origin {
                corner
            } else {
                let mut c = 0.0;
                for &(x, wx) in &nw {
                    let u = a as f64 + x;
                    for &(y, wy) in &nw {
                        let v = b as f64 + y;
                        c += wx * wy * (u * u + v * v).powf(-alpha);
                    }
                }
                c
            };
            s.add(lattice_term - cell);
        }
    }
    s.total()
}

/// Leading terms of the cells beyond the truncation radius.
fn tail_correction(alpha: f64, truncation: usize) -> f64 {
    let t = truncation as f64;
    -2.0 * PI * t.powf(2.0 - 4.0 * alpha) / (4.0 * alpha - 2.0)
        - 2.0 * PI * alpha / 3.0 * t.powf(-2.0 * alpha)
}

/// `b̄₁ = (1/4π²)(1 + Σ_k ∫_{C_k} (1_{k≠0}/(1+|k|^{2α}) - |ξ|^{-2α}) dξ)` with
/// unit cells `C_k = k + [0,1]²`, summed over `|k| ≤ truncation`.
pub fn lattice_constant_b1(
    alpha: f64,
    truncation: usize,
    cell_quad_order: usize,
    tol: f64,
) -> Result<B1Estimate> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let s1 = cell_sum(alpha, truncation, cell_quad_order);
    let s2 = cell_sum(alpha, truncation, 2 * cell_quad_order);
    let quad_delta = (s2 - s1).abs() / (4.0 * PI * PI);
    if quad_delta > tol {
        return Err(Error::QuadratureNotConverged {
            delta: quad_delta,
            tol,
        });
    }
    let tail = tail_correction(alpha, truncation);
    Ok(B1Estimate {
        value: (1.0 + s1 + tail) / (4.0 * PI * PI),
        tail_bound: tail.abs() / (4.0 * PI * PI),
        quad_delta,
        truncation,
        order: cell_quad_order,
    })
}

pub const B1_TRUNCATION: usize = 128;
pub const B1_ORDER: usize = 8;
pub const B1_TOL: f64 = 1e-8;

/// `b̄₁` at the default truncation and order, memoised per `α`.
pub fn b1_default(alpha: f64) -> Result<B1Estimate> {
    static CACHE: OnceLock<Mutex<HashMap<u64, B1Estimate>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = alpha.to_bits();
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return Ok(*v);
    }
    let v = lattice_constant_b1(alpha, B1_TRUNCATION, B1_ORDER, B1_TOL)?;
    cache.lock().unwrap().insert(key, v);
    Ok(v)
}

/// `λ₀ = (b̄₁/2) · d/dv E[V''(N(0, v))]` at `v = σ²`, which equals `6 b̄₁ ā₂`.
pub fn lambda0_with(spec: &PotentialSpec, alpha: f64, b_bar_1: f64) -> f64 {
    let abar = spec.averaged_coeffs(sigma_sq(alpha));
    6.0 * b_bar_1 * abar.get(2).copied().unwrap_or(0.0)
}

pub fn lambda0(spec: &PotentialSpec, alpha: f64) -> Result<f64> {
    Ok(lambda0_with(spec, alpha, b1_default(alpha)?.value))
}

/// Every scalar needed at one `(α, N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormTable {
    pub alpha: f64,
    pub n: usize,
    pub potential: Vec<f64>,
    pub sigma_sq: f64,
    pub sigma_n_sq: f64,
    pub sigma_tilde_n_sq: f64,
    pub a_bar: Vec<f64>,
    pub a_bar_n: Vec<f64>,
    pub kappa_n: f64,
    pub b_bar_1: f64,
    pub b_bar_1_tail: f64,
    pub lambda_0: f64,
    /// `4 ā₂`, the cubic coupling of the limiting wave equation.
    pub lambda_cubic: f64,
    /// `ā₂`, the quartic coupling of the limiting measure.
    pub lambda_measure: f64,
}

impl RenormTable {
    pub fn new(spec: &PotentialSpec, alpha: f64, n: usize) -> Result<Self> {
        let b1 = b1_default(alpha)?;
        Self::with_b1(spec, alpha, n, b1)
    }

    pub fn with_b1(spec: &PotentialSpec, alpha: f64, n: usize, b1: B1Estimate) -> Result<Self> {
        let sc = sigma_constants(alpha, n)?;
        let a_bar = spec.averaged_coeffs(sc.sigma_sq);
        let a_bar_n = spec.averaged_coeffs(sc.sigma_n_sq);
        let beta = 1.0 - alpha;
        let a1n = a_bar_n.get(1).copied().unwrap_or(0.0);
        let a2 = a_bar.get(2).copied().unwrap_or(0.0);
        Ok(Self {
            alpha,
            n,
            potential: spec.coeffs().to_vec(),
            sigma_sq: sc.sigma_sq,
            sigma_n_sq: sc.sigma_n_sq,
            sigma_tilde_n_sq: sc.sigma_tilde_n_sq,
            kappa_n: 2.0 * a1n * (n as f64).powf(2.0 * beta) - 1.0,
            lambda_0: lambda0_with(spec, alpha, b1.value),
            b_bar_1: b1.value,
            b_bar_1_tail: b1.tail_bound,
            lambda_cubic: 4.0 * a2,
            lambda_measure: a2,
            a_bar,
            a_bar_n,
        })
    }

    pub fn m(&self) -> usize {
        self.potential.len() - 1
    }

    pub fn beta(&self) -> f64 {
        1.0 - self.alpha
    }

    /// `ā_{j,N} N^{-(2j-4)(1-α)}`, the coefficient of `H_{2j}(·; σ̃_N²)` in `V_N`.
    pub fn wick_coeff(&self, j: usize) -> f64 {
        let e = -((2 * j) as f64 - 4.0) * self.beta();
        self.a_bar_n[j] * (self.n as f64).powf(e)
    }

    /// Same scaling with the limiting `ā_j`.
    pub fn wick_coeff_limit(&self, j: usize) -> f64 {
        let e = -((2 * j) as f64 - 4.0) * self.beta();
        self.a_bar[j] * (self.n as f64).powf(e)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("table serialises");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

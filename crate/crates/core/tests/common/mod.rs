//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use fracwave_core::SpectralField;
use num_complex::Complex64;

pub type Modes = HashMap<(i64, i64), Complex64>;

/// Monomial coefficients of `H_k(x; v)` from the explicit sum
/// `Σ_m k!/(m!(k-2m)!) (-v/2)^m x^{k-2m}`.
pub fn explicit_hermite_coeffs(k: usize, v: f64) -> Vec<f64> {
    let mut c = vec![0.0; k + 1];
    for m in 0..=k / 2 {
        let mut a = 1.0;
        for i in 0..2 * m {
            a *= (k - i) as f64;
        }
        for i in 1..=m {
            a /= i as f64;
        }
        c[k - 2 * m] = a * (-v / 2.0).powi(m as i32);
    }
    c
}

pub fn sparse(f: &SpectralField) -> Modes {
    f.modes()
        .filter(|(_, c)| c.norm() != 0.0)
        .collect()
}

pub fn convolve(a: &Modes, b: &Modes) -> Modes {
    let mut out = Modes::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            *out.entry((ka.0 + kb.0, ka.1 + kb.1)).or_default() += ca * cb;
        }
    }
    out
}

/// Coefficients of `Σ_p poly[p] f^p` by repeated convolution.
pub fn polynomial_of(f: &Modes, poly: &[f64]) -> Modes {
    let mut out = Modes::new();
    let mut pow = Modes::new();
    pow.insert((0, 0), Complex64::new(1.0, 0.0));
    for (p, c) in poly.iter().enumerate() {
        if *c != 0.0 {
            for (k, v) in &pow {
                *out.entry(*k).or_default() += v * *c;
            }
        }
        if p + 1 < poly.len() {
            pow = convolve(&pow, f);
        }
    }
    out
}

/// Monomial coefficients of `Σ_l w_l H_l(x; v)`.
pub fn wick_polynomial(weights: &[f64], v: f64) -> Vec<f64> {
    let mut out = vec![0.0; weights.len()];
    for (l, w) in weights.iter().enumerate() {
        for (p, c) in explicit_hermite_coeffs(l, v).iter().enumerate() {
            out[p] += w * c;
        }
    }
    out
}

pub fn max_abs(m: &Modes) -> f64 {
    m.values().map(|c| c.norm()).fold(0.0, f64::max)
}

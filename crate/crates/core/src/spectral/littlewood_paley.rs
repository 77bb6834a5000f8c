//! Smooth dyadic partition of unity and Besov-type norms.
//!
//! `s(x) = e^{-1/x} / (e^{-1/x} + e^{-1/(1-x)})` on `(0, 1)` is the smooth
//! step. The low bump is `χ(r) = 1 - s((r - 3/4) / (4/3 - 3/4))`, equal to 1
//! for `r ≤ 3/4` and 0 for `r ≥ 4/3`. The annular bump is
//! `φ(r) = χ(r/2) - χ(r)`, supported in `[3/4, 8/3]`, and block `j ≥ 0`
//! uses `φ(2^{-j} r)`. Block `-1` is `χ` itself, so the blocks telescope to 1.

use serde::{Deserialize, Serialize};

use super::{Lattice, SpectralField};
use crate::error::Result;

pub fn transition(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

pub fn chi(r: f64) -> f64 {
    1.0 - transition((r - 0.75) / (4.0 / 3.0 - 0.75))
}

pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// Symbol of block `j` (`j = -1` is the low block).
pub fn lp_bump(j: i32, r: f64) -> f64 {
    if j < 0 {
        chi(r)
    } else {
        phi(r * 2f64.powi(-j))
    }
}

/// Number of blocks `j = -1, 0, ..., J` needed to cover `|k| ≤ band`.
pub fn lp_block_count(band: usize) -> usize {
    let mut j = 0;
    while 0.75 * 2f64.powi(j + 1) < band as f64 {
        j += 1;
    }
    // blocks -1..=j
    (j + 2) as usize
}

pub fn lp_block(f: &SpectralField, j: i32) -> SpectralField {
    f.map_symbol(|k1, k2| lp_bump(j, ((k1 * k1 + k2 * k2) as f64).sqrt()))
}

/// A norm together with an estimate of its quadrature error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub tolerance: f64,
}

fn lq_on(f: &SpectralField, q: f64, m: usize) -> Result<f64> {
    let lat = Lattice::new(f.lattice().cutoff_n(), m, f.lattice().alpha())?;
    let x = f.relattice(lat).to_physical()?;
    if q.is_infinite() {
        return Ok(x.iter().fold(0.0, |a, v| a.max(v.abs())));
    }
    let area = lat.cell_area();
    Ok((x.iter().map(|v| v.abs().powf(q)).sum::<f64>() * area).powf(1.0 / q))
}

/// `L^q` norm by rectangle rule on an oversampled grid. For even integer
/// `q` the grid makes the rule exact; otherwise the tolerance is the change
/// under a finer grid.
pub fn lq_norm(f: &SpectralField, q: f64) -> Result<NormValue> {
    let band = f.band().max(1);
    let even_int = q.is_finite() && q.fract() == 0.0 && (q as usize) % 2 == 0;
    if even_int {
        let m = super::smooth_odd_at_least((q as usize) * band + 1).max(
            super::smooth_odd_at_least(2 * band + 1),
        );
        return Ok(NormValue {
            value: lq_on(f, q, m)?,
            tolerance: 0.0,
        });
    }
    let m1 = super::smooth_odd_at_least(4 * band + 1);
    let m2 = super::smooth_odd_at_least(8 * band + 1);
    let v1 = lq_on(f, q, m1)?;
    let v2 = lq_on(f, q, m2)?;
    Ok(NormValue {
        value: v2,
        tolerance: (v2 - v1).abs(),
    })
}

/// `‖ (2^{jγ} ‖P_j f‖_{L^integrability})_j ‖_{ℓ^summability}` over the blocks
/// covering the band of `f`.
pub fn besov_norm(
    f: &SpectralField,
    gamma: f64,
    integrability: f64,
    summability: f64,
) -> Result<NormValue> {
    let count = lp_block_count(f.band());
    let mut vals = Vec::with_capacity(count);
    let mut tols = Vec::with_capacity(count);
    for idx in 0..count {
        let j = idx as i32 - 1;
        let w = 2f64.powf(j as f64 * gamma);
        let n = lq_norm(&lp_block(f, j), integrability)?;
        vals.push(w * n.value);
        tols.push(w * n.tolerance);
    }
    let agg = |v: &[f64]| {
        if summability.is_infinite() {
            v.iter().fold(0.0f64, |a, &b| a.max(b))
        } else {
            v.iter().map(|x| x.powf(summability)).sum::<f64>().powf(1.0 / summability)
        }
    };
    Ok(NormValue {
        value: agg(&vals),
        tolerance: agg(&tols),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn bump_supports() {
        assert_eq!(chi(0.75), 1.0);
        assert_eq!(chi(4.0 / 3.0), 0.0);
        assert_eq!(phi(0.7), 0.0);
        assert_eq!(phi(8.0 / 3.0), 0.0);
        assert!(phi(1.5) > 0.99);
    }

    #[test]
    fn unit_mode_sits_in_low_and_first_block() {
        let lat = Lattice::new(4, 17, 0.9).unwrap();
        let f = SpectralField::mode(lat, 4, (1, 0), Complex64::new(1.0, 0.0));
        let count = lp_block_count(4);
        for idx in 0..count {
            let j = idx as i32 - 1;
            let b = lp_block(&f, j);
            let nz = b.coeff_norm_sq() > 0.0;
            assert_eq!(nz, j == -1 || j == 0, "block {j}");
        }
    }

    #[test]
    fn l2_via_grid_matches_parseval() {
        let lat = Lattice::new(5, 23, 0.9).unwrap();
        let f = SpectralField::mode(lat, 5, (2, 3), Complex64::new(0.3, -0.2));
        let n = lq_norm(&f, 2.0).unwrap();
        assert!((n.value - f.l2_norm_sq().sqrt()).abs() < 1e-12);
    }
}

//! Pruned 2-D transforms between a coefficient square `[-band, band]²` and an
//! `m × m` physical grid with points `x_j = 2πj/m`.
//!
//! Physical arrays are row-major with the first coordinate as the row index.
//! `inverse` computes the plain sum `Σ_k c_k e^{ik·x}` and `forward_*` divides
//! by `m²`, so the pair is an exact round trip for band-limited data.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

struct Plans {
    planner: FftPlanner<f64>,
    cache: HashMap<(usize, bool), Arc<dyn Fft<f64>>>,
}

thread_local! {
    static PLANS: RefCell<Plans> = RefCell::new(Plans {
        planner: FftPlanner::new(),
        cache: HashMap::new(),
    });
}

fn plan(m: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    let key = (m, matches!(dir, FftDirection::Forward));
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        if let Some(f) = p.cache.get(&key) {
            return f.clone();
        }
        let f = p.planner.plan_fft(m, dir);
        p.cache.insert(key, f.clone());
        f
    })
}

#[inline]
fn wrap(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    const B: usize = 32;
    for ib in (0..m).step_by(B) {
        for jb in (0..m).step_by(B) {
            for i in ib..(ib + B).min(m) {
                for j in jb..(jb + B).min(m) {
                    dst[j * m + i] = src[i * m + j];
                }
            }
        }
    }
}

/// Complex samples `Σ_k c_k e^{ik·x}` on the `m × m` grid. Coefficients are
/// given on the square `[-band, band]²`, row-major in `k1`.
pub fn inverse(coeffs: &[Complex64], band: usize, m: usize) -> Vec<Complex64> {
    let side = 2 * band + 1;
    assert_eq!(coeffs.len(), side * side);
    assert!(m >= side, "grid {m} too small for band {band}");
    let b = band as i64;
    let fft = plan(m, FftDirection::Inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::default(); m * m];
    for k1 in -b..=b {
        let r = wrap(k1, m);
        let row = &mut buf[r * m..(r + 1) * m];
        let src = &coeffs[((k1 + b) as usize) * side..((k1 + b) as usize + 1) * side];
        for (j, c) in src.iter().enumerate() {
            row[wrap(j as i64 - b, m)] = *c;
        }
        fft.process_with_scratch(row, &mut scratch);
    }
    let mut t = vec![Complex64::default(); m * m];
    transpose(&buf, &mut t, m);
    fft.process_with_scratch(&mut t, &mut scratch);
    transpose(&t, &mut buf, m);
    buf
}

fn forward_complex(samples: Vec<Complex64>, m: usize, band: usize) -> Vec<Complex64> {
    assert_eq!(samples.len(), m * m);
    assert!(m > 2 * band, "grid {m} too small for band {band}");
    let side = 2 * band + 1;
    let b = band as i64;
    let fft = plan(m, FftDirection::Forward);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut buf = samples;
    fft.process_with_scratch(&mut buf, &mut scratch);
    let norm = 1.0 / (m * m) as f64;
    let mut out = vec![Complex64::default(); side * side];
    let mut col = vec![Complex64::default(); m];
    for k2 in -b..=b {
        let c = wrap(k2, m);
        for (i, v) in col.iter_mut().enumerate() {
            *v = buf[i * m + c];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for k1 in -b..=b {
            out[((k1 + b) as usize) * side + (k2 + b) as usize] = col[wrap(k1, m)] * norm;
        }
    }
    out
}

/// Coefficients on `[-band, band]²` of real samples on the `m × m` grid.
pub fn forward_real(samples: &[f64], m: usize, band: usize) -> Vec<Complex64> {
    let buf = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_complex(buf, m, band)
}

/// Two real fields through one complex transform.
pub fn forward_real_pair(
    a: &[f64],
    b: &[f64],
    m: usize,
    band: usize,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let buf = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| Complex64::new(x, y))
        .collect();
    let z = forward_complex(buf, m, band);
    let side = 2 * band + 1;
    let n = side * side;
    let mut ca = vec![Complex64::default(); n];
    let mut cb = vec![Complex64::default(); n];
    for i in 0..n {
        // the mirror of flat index i on the square is n - 1 - i
        let zm = z[n - 1 - i].conj();
        ca[i] = (z[i] + zm) * 0.5;
        cb[i] = (z[i] - zm) * Complex64::new(0.0, -0.5);
    }
    (ca, cb)
}

/// Samples of two real (Hermitian) fields from one complex transform.
pub fn inverse_real_pair(
    a: &[Complex64],
    b: &[Complex64],
    band: usize,
    m: usize,
) -> (Vec<f64>, Vec<f64>) {
    let packed: Vec<Complex64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x + Complex64::i() * y)
        .collect();
    let z = inverse(&packed, band, m);
    (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_round_trip() {
        let band = 3;
        let side = 7;
        let m = 9;
        let mut c = vec![Complex64::default(); side * side];
        c[(2 + 3) * side + (1 + 3)] = Complex64::new(0.5, 0.25);
        let x = inverse(&c, band, m);
        let h = 2.0 * std::f64::consts::PI / m as f64;
        for i in 0..m {
            for j in 0..m {
                let ph = 2.0 * i as f64 * h + j as f64 * h;
                let want = Complex64::new(0.5, 0.25) * Complex64::from_polar(1.0, ph);
                assert!((x[i * m + j] - want).norm() < 1e-13);
            }
        }
        let back = forward_complex(x, m, band);
        for (u, v) in back.iter().zip(&c) {
            assert!((u - v).norm() < 1e-14);
        }
    }
}

//! Gaussian samplers for the base measures and Wick powers of fields.
//!
//! Bit stream: a ChaCha8 generator keyed by the 64-bit seed (little-endian
//! in the first eight key bytes, the rest zero), on stream
//! `2·stream_id + tag` with tag 0 for positions and 1 for velocities.
//! Each mode consumes two 64-bit words `w1, w2`, mapped to
//! `u1 = (⌊w1/2^11⌋ + 1)·2^-53 ∈ (0, 1]` and `u2 = ⌊w2/2^11⌋·2^-53 ∈ [0, 1)`.
//! Box–Muller gives `x = √(-2 ln u1) cos 2πu2`, `y = √(-2 ln u1) sin 2πu2`.
//! The zero mode is the real normal `x`; every other mode of the half-lattice
//! takes `g_k = (x + iy)/√2` and `g_{-k} = conj g_k`. Modes are visited in
//! the order `(|k|², k1, k2)`, so a sample at cutoff `N` is a prefix of the
//! same stream at any larger cutoff and `Π_N` of the larger sample equals
//! the smaller one exactly.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::renorm::hermite;
use crate::spectral::{in_half_lattice, jap_sq, Lattice, SpectralField};

/// Reproducible address of one random field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    fn rng(&self, tag: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(2 * self.stream_id + tag);
        rng
    }
}

/// Denominator of the position modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialDataConvention {
    /// `√(1 + |k|^{2α})`, the covariance of the base measure.
    #[default]
    TwoAlpha,
    /// `√(1 + |k|^α)`.
    Alpha,
}

const TAG_POSITION: u64 = 0;
const TAG_VELOCITY: u64 = 1;

/// Non-zero half-lattice modes of `|k| ≤ n` in sampling order.
pub fn mode_order(n: usize) -> Arc<Vec<(i64, i64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(i64, i64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&n) {
        return v.clone();
    }
    let b = n as i64;
    let mut v: Vec<(i64, i64)> = (-b..=b)
        .flat_map(|k1| (-b..=b).map(move |k2| (k1, k2)))
        .filter(|&(k1, k2)| k1 * k1 + k2 * k2 <= b * b && in_half_lattice(k1, k2))
        .collect();
    v.sort_by_key(|&(k1, k2)| (k1 * k1 + k2 * k2, k1, k2));
    let v = Arc::new(v);
    cache.lock().unwrap().insert(n, v.clone());
    v
}

fn box_muller(rng: &mut ChaCha8Rng) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * SCALE;
    let u2 = (rng.next_u64() >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * PI * u2;
    (r * t.cos(), r * t.sin())
}

/// Standard complex Gaussians `g_k` for `|k| ≤ n` in sampling order: the
/// zero mode first (real), then the half-lattice.
fn gaussian_modes(stream: SeededStream, tag: u64, n: usize) -> (f64, Vec<Complex64>) {
    let mut rng = stream.rng(tag);
    let g0 = box_muller(&mut rng).0;
    let order = mode_order(n);
    let g = order
        .iter()
        .map(|_| {
            let (x, y) = box_muller(&mut rng);
            Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    (g0, g)
}

fn build(
    lattice: Lattice,
    g0: f64,
    g: &[Complex64],
    mut scale: impl FnMut(i64, i64) -> f64,
) -> SpectralField {
    let n = lattice.cutoff_n();
    let mut f = SpectralField::zeros(lattice, n);
    f.set_pair(0, 0, Complex64::new(g0 * scale(0, 0), 0.0));
    for (&(k1, k2), gk) in mode_order(n).iter().zip(g) {
        f.set_pair(k1, k2, gk * scale(k1, k2));
    }
    f
}

/// `φ = (1/2π) Σ_{|k|≤N} g_k (1+|k|^{2α})^{-1/2} e^{ik·x}`.
pub fn sample_mu(lattice: &Lattice, stream: SeededStream) -> SpectralField {
    sample_mu_with(lattice, stream, InitialDataConvention::TwoAlpha)
}

pub fn sample_mu_with(
    lattice: &Lattice,
    stream: SeededStream,
    convention: InitialDataConvention,
) -> SpectralField {
    let alpha = lattice.alpha();
    let (g0, g) = gaussian_modes(stream, TAG_POSITION, lattice.cutoff_n());
    build(*lattice, g0, &g, |k1, k2| {
        let d = match convention {
            InitialDataConvention::TwoAlpha => jap_sq(alpha, k1, k2),
            InitialDataConvention::Alpha => {
                1.0 + ((k1 * k1 + k2 * k2) as f64).powf(0.5 * alpha)
            }
        };
        1.0 / (2.0 * PI * d.sqrt())
    })
}

/// `ψ = (1/2π) Σ_{|k|≤N} h_k e^{ik·x}`.
pub fn sample_white(lattice: &Lattice, stream: SeededStream) -> SpectralField {
    let (h0, h) = gaussian_modes(stream, TAG_VELOCITY, lattice.cutoff_n());
    build(*lattice, h0, &h, |_, _| 1.0 / (2.0 * PI))
}

/// Raw position Gaussians `(g_0, g_k)` in sampling order, for estimators
/// that treat the zero mode separately.
pub fn position_gaussians(stream: SeededStream, n: usize) -> (f64, Vec<Complex64>) {
    gaussian_modes(stream, TAG_POSITION, n)
}

/// `H_k(f(x); var)` evaluated on the grid and transformed back, with band
/// `k·band(f)`. No projection is applied.
pub fn wick_power(f: &SpectralField, k: usize, var: f64) -> Result<SpectralField> {
    let lat = *f.lattice();
    let out_band = k.max(1) * f.band();
    let required = 2 * out_band + 1;
    if lat.grid_m() < required {
        return Err(Error::GridTooSmall {
            grid_m: lat.grid_m(),
            band: out_band,
            required,
        });
    }
    let x = f.to_physical()?;
    let h: Vec<f64> = x.iter().map(|&v| hermite(k, v, var)).collect();
    SpectralField::from_physical(lat, out_band, &h)
}

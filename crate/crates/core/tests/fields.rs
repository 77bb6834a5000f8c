use fracwave_core::sampling::{sample_mu, sample_white, SeededStream};
use fracwave_core::spectral::{lp_block, lp_block_count};
use fracwave_core::{wick_power, Exactness, Lattice, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;

mod common;

fn random_field(lat: Lattice, band: usize, seed: u64) -> SpectralField {
    sample_white(&lat, SeededStream::new(seed, 0)).project(band).with_band(band)
}

#[test]
fn product_matches_coefficient_convolution() {
    for d in 2..=4usize {
        for band in 1..=4usize {
            let lat = Lattice::for_degree(band, 0.9, d, Exactness::Full).unwrap();
            let fields: Vec<SpectralField> =
                (0..d).map(|i| random_field(lat, band, 10 * d as u64 + i as u64)).collect();
            let xs: Vec<Vec<f64>> = fields.iter().map(|f| f.to_physical().unwrap()).collect();
            let prod: Vec<f64> = (0..xs[0].len()).map(|i| xs.iter().map(|x| x[i]).product()).collect();
            let got = SpectralField::from_physical(lat, d * band, &prod).unwrap();
            let mut want = common::sparse(&fields[0]);
            for f in &fields[1..] {
                want = common::convolve(&want, &common::sparse(f));
            }
            let scale = common::max_abs(&want);
            let b = (d * band) as i64;
            for k1 in -b..=b {
                for k2 in -b..=b {
                    if k1 * k1 + k2 * k2 > b * b {
                        continue;
                    }
                    let w = want.get(&(k1, k2)).copied().unwrap_or_default();
                    assert!((got.coeff(k1, k2) - w).norm() < 1e-12 * scale, "d={d} band={band}");
                }
            }
        }
    }
}

#[test]
fn parseval() {
    let lat = Lattice::new(12, 25, 0.9).unwrap();
    let f = sample_mu(&lat, SeededStream::new(5, 1));
    let x = f.to_physical().unwrap();
    let grid: f64 = x.iter().map(|v| v * v).sum::<f64>() * lat.cell_area();
    let spec = 4.0 * std::f64::consts::PI.powi(2) * f.coeff_norm_sq();
    assert!((grid - spec).abs() < 1e-10 * spec);
}

#[test]
fn lp_blocks_reconstruct() {
    let lat = Lattice::new(20, 41, 0.9).unwrap();
    let f = sample_mu(&lat, SeededStream::new(9, 2));
    let mut sum = SpectralField::zeros(lat, f.band());
    for j in -1..lp_block_count(f.band()) as i32 {
        sum = sum.add(&lp_block(&f, j));
    }
    let err = sum.sub(&f).coeff_norm_sq().sqrt() / f.coeff_norm_sq().sqrt();
    assert!(err < 1e-12);
}

#[test]
fn pointwise_variance_matches_sigma_tilde() {
    let n = 8;
    let lat = Lattice::new(n, 17, 0.9).unwrap();
    let st = fracwave_core::renorm::sigma_tilde_sq(0.9, n);
    let samples = 4000;
    let vals: Vec<f64> = (0..samples)
        .map(|i| {
            let x = sample_mu(&lat, SeededStream::new(77, i)).to_physical().unwrap();
            x[0] * x[0]
        })
        .collect();
    let (m, se) = fracwave_core::stats::mean_se(&vals);
    assert!((m - st).abs() < 3.0 * se, "{m} ± {se} vs {st}");
}

#[test]
fn wick_powers_are_centred() {
    let n = 8;
    let lat = Lattice::new(n, 35, 0.9).unwrap();
    let st = fracwave_core::renorm::sigma_tilde_sq(0.9, n);
    for k in [2usize, 4] {
        let lat = lat.regrid(k, Exactness::Full);
        let vals: Vec<f64> = (0..2000)
            .map(|i| wick_power(&sample_mu(&lat, SeededStream::new(31, i)), k, st).unwrap().integral())
            .collect();
        let (m, se) = fracwave_core::stats::mean_se(&vals);
        assert!(m.abs() < 3.0 * se, "k={k}: {m} ± {se}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn round_trip(seed in any::<u64>(), band in 1usize..10) {
        let lat = Lattice::new(band, 2 * band + 1, 0.9).unwrap();
        let f = random_field(lat, band, seed);
        let g = SpectralField::from_physical(lat, band, &f.to_physical().unwrap()).unwrap();
        let err = g.sub(&f).coeff_norm_sq().sqrt();
        prop_assert!(err <= 1e-12 * f.coeff_norm_sq().sqrt().max(1e-300));
    }

    #[test]
    fn projection_idempotent_and_self_adjoint(seed in any::<u64>(), n in 0usize..12) {
        let lat = Lattice::new(10, 21, 0.9).unwrap();
        let f = random_field(lat, 10, seed);
        let g = random_field(lat, 10, seed.wrapping_add(1));
        prop_assert_eq!(f.project(n).project(n), f.project(n));
        let a = f.project(n).dot(&g);
        let b = f.dot(&g.project(n));
        prop_assert!((a - b).abs() <= 1e-12 * (a.abs() + 1e-300));
        prop_assert!(f.project(n).is_hermitian(1e-14));
    }

    #[test]
    fn cosine_samples(k1 in -4i64..=4, k2 in -4i64..=4) {
        prop_assume!(k1 * k1 + k2 * k2 <= 16);
        let lat = Lattice::new(4, 11, 0.9).unwrap();
        let f = SpectralField::mode(lat, 4, (k1, k2), Complex64::new(0.5, 0.0));
        let x = f.to_physical().unwrap();
        let m = lat.grid_m();
        let h = 2.0 * std::f64::consts::PI / m as f64;
        for i in 0..m {
            for j in 0..m {
                let want = if (k1, k2) == (0, 0) {
                    0.5
                } else {
                    ((k1 * i as i64 + k2 * j as i64) as f64 * h).cos()
                };
                prop_assert!((x[i * m + j] - want).abs() < 1e-12);
            }
        }
    }
}

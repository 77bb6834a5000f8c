use std::f64::consts::PI;

use fracwave_core::gibbs::{
    counterexample_bound, counterexample_growth, density_gap_mc, log_partition_mc,
    potential_integral, tail_probability, CoeffSource, McConfig, Variant,
};
use fracwave_core::renorm::hermite;
use fracwave_core::{sample_mu, Error, Exactness, Lattice, Preset, RenormTable, SeededStream, SpectralField};
use num_complex::Complex64;

mod common;

fn table(p: Preset, n: usize) -> RenormTable {
    RenormTable::new(&p.spec(0.9), 0.9, n).unwrap()
}

fn wick_weights(t: &RenormTable, variant: Variant) -> Vec<f64> {
    let m = t.m();
    let mut w = vec![0.0; 2 * m + 1];
    let j0 = if matches!(variant, Variant::Full | Variant::Tilde) { 1 } else { 2 };
    for j in j0..=m {
        w[2 * j] = t.wick_coeff(j);
    }
    if matches!(variant, Variant::Tilde | Variant::Measure) {
        w[2] -= 0.5;
    }
    w
}

#[test]
fn integral_of_zero_field() {
    let t = table(Preset::TunedSextic, 16);
    let lat = Lattice::for_degree(16, 0.9, 6, Exactness::Integral).unwrap();
    let got = potential_integral(&SpectralField::zeros(lat, 16), &t, Variant::Full).unwrap();
    let mut want = 0.0;
    for j in 1..=t.m() {
        let df: f64 = (1..2 * j).step_by(2).map(|x| x as f64).product();
        want += t.wick_coeff(j) * df * (-t.sigma_tilde_n_sq).powi(j as i32);
        assert_eq!(hermite(2 * j, 0.0, t.sigma_tilde_n_sq), df * (-t.sigma_tilde_n_sq).powi(j as i32));
    }
    want *= 4.0 * PI * PI;
    assert!((got - want).abs() < 1e-12 * want.abs());
}

#[test]
fn two_mode_integral_matches_convolution() {
    let t = table(Preset::TunedSextic, 4);
    for variant in [Variant::Full, Variant::Tilde, Variant::Measure] {
        let lat = Lattice::for_degree(4, 0.9, 6, Exactness::Integral).unwrap();
        let mut f = SpectralField::zeros(lat, 4);
        f.set_pair(1, 2, Complex64::new(0.4, -0.3));
        f.set_pair(3, 0, Complex64::new(-0.2, 0.5));
        f.set_pair(0, 0, Complex64::new(0.1, 0.0));
        let got = potential_integral(&f, &t, variant).unwrap();
        let poly = common::wick_polynomial(&wick_weights(&t, variant), t.sigma_tilde_n_sq);
        let modes = common::polynomial_of(&common::sparse(&f), &poly);
        let want = 4.0 * PI * PI * modes.get(&(0, 0)).copied().unwrap_or_default().re;
        assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{variant:?}");
    }
}

#[test]
fn expansion_under_constant_shift() {
    // Ṽ(W+U) = Σ_j c_j Σ_l C(2j,l) H_{2j-l}(W) U^l - ½(H_2(W) + 2UW + U²)
    let t = table(Preset::TunedSextic, 12);
    let lat = Lattice::for_degree(12, 0.9, 6, Exactness::Integral).unwrap();
    let w = sample_mu(&lat, SeededStream::new(4, 4));
    let v = t.sigma_tilde_n_sq;
    for u in [0.0, 0.7, -1.3] {
        let direct = potential_integral(&w.add(&SpectralField::constant(lat, u)), &t, Variant::Tilde).unwrap();
        let x = w.to_physical().unwrap();
        let graded: f64 = x
            .iter()
            .map(|&wx| {
                let mut s = 0.0;
                for j in 1..=t.m() {
                    let mut binom = 1.0;
                    for l in 0..=2 * j {
                        s += t.wick_coeff(j) * binom * hermite(2 * j - l, wx, v) * u.powi(l as i32);
                        binom = binom * (2 * j - l) as f64 / (l + 1) as f64;
                    }
                }
                s - 0.5 * (hermite(2, wx, v) + 2.0 * u * wx + u * u)
            })
            .sum::<f64>()
            * lat.cell_area();
        assert!((direct - graded).abs() < 1e-9 * direct.abs().max(1.0), "u={u}");
    }
}

#[test]
fn jensen_lower_bound() {
    let t = table(Preset::TunedQuartic, 16);
    let e = log_partition_mc(&t, Variant::Measure, 1.0, &McConfig::new(2000, 3)).unwrap();
    assert!(e.mean >= -3.0 * e.std_error);
    assert!(e.std_error >= 0.0);
}

#[test]
fn disjoint_seed_blocks_agree() {
    let t = table(Preset::TunedQuartic, 8);
    let a = log_partition_mc(&t, Variant::Measure, 1.0, &McConfig::new(2000, 100)).unwrap();
    let b = log_partition_mc(&t, Variant::Measure, 1.0, &McConfig::new(2000, 200)).unwrap();
    let pooled = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() < 3.0 * pooled);
}

#[test]
fn exponent_below_one_is_rejected() {
    let t = table(Preset::TunedQuartic, 8);
    let e = log_partition_mc(&t, Variant::Measure, 0.5, &McConfig::new(10, 1));
    assert!(matches!(e, Err(Error::Config(_))));
}

#[test]
fn frozen_gap_vanishes_at_reference() {
    let t = table(Preset::TunedQuartic, 16);
    let g = density_gap_mc(&t, 16, 1.0, CoeffSource::Limit, &McConfig::new(200, 9)).unwrap();
    assert!(g.mean.abs() < 1e-12, "{}", g.mean);
    let plain = density_gap_mc(&t, 16, 1.0, CoeffSource::Limit, &McConfig::new(200, 9).plain()).unwrap();
    assert!(plain.mean.abs() < 1e-12);
}

#[test]
fn gap_power_mean() {
    let t = table(Preset::TunedQuartic, 8);
    let cfg = McConfig::new(300, 21).plain();
    let g1 = density_gap_mc(&t, 32, 1.0, CoeffSource::Truncated, &cfg).unwrap();
    let g2 = density_gap_mc(&t, 32, 2.0, CoeffSource::Truncated, &cfg).unwrap();
    assert!(g1.mean <= g2.mean.sqrt() * (1.0 + 1e-12));
}

#[test]
fn reference_below_cutoff_is_rejected() {
    let t = table(Preset::TunedQuartic, 16);
    assert!(density_gap_mc(&t, 8, 1.0, CoeffSource::Truncated, &McConfig::new(10, 1)).is_err());
}

#[test]
fn counterexample_requires_violation() {
    let spec = Preset::TunedQuartic.spec(0.9);
    assert!(matches!(
        counterexample_growth(&spec, 0.9, 1.0, &[16, 32]),
        Err(Error::PositivityHolds { .. })
    ));
    let bad = Preset::ViolatingSextic.spec(0.9);
    let g = counterexample_growth(&bad, 0.9, 1.0, &[16, 32, 64]).unwrap();
    assert!(g.rows.windows(2).all(|r| r[1].bound < r[0].bound));
    let t = table(Preset::ViolatingSextic, 16);
    assert_eq!(counterexample_bound(&t, 0.0), 0.0);
}

#[test]
fn tail_curve_decreases() {
    let t = table(Preset::TunedQuartic, 16);
    let r: Vec<f64> = (1..=12).map(|i| i as f64 * 0.5).collect();
    let c = tail_probability(&t, Variant::Full, &r, &McConfig::new(3000, 5)).unwrap();
    assert!(c.points.windows(2).all(|p| p[1].probability <= p[0].probability));
    assert!(c.points.iter().all(|p| p.lower <= p.probability && p.probability <= p.upper));
    assert_eq!(c.reference_exponent, 0.25);
}

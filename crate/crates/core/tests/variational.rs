use fracwave_core::gibbs::{counterexample_bound, potential_integral, Variant};
use fracwave_core::sampling::mode_order;
use fracwave_core::variational::{
    cameron_martin_ratio, minimize, objective, objective_grad, shifted_field, DriftProfile,
    MinimizeOptions,
};
use fracwave_core::{sample_mu, Exactness, Lattice, Preset, RenormTable, SeededStream};
use proptest::prelude::*;

fn table(p: Preset, n: usize) -> RenormTable {
    RenormTable::new(&p.spec(0.9), 0.9, n).unwrap()
}

fn drift(band: usize, params: Vec<f64>) -> DriftProfile {
    DriftProfile::from_params(band, params).unwrap()
}

#[test]
fn constant_drift_matches_counterexample() {
    let t = table(Preset::ViolatingSextic, 32);
    let theta = 0.8;
    let u = theta * 32f64.powf(t.beta());
    let got = objective(&DriftProfile::constant(4, u), &t).unwrap();
    let want = counterexample_bound(&t, theta);
    assert!((got - want).abs() < 1e-10 * want.abs());
}

#[test]
fn shifted_constant_is_constant() {
    let lat = Lattice::new(8, 17, 0.9).unwrap();
    let u = shifted_field(&DriftProfile::constant(8, 1.7), lat, 8);
    assert!((u.coeff(0, 0).re - 1.7).abs() < 1e-15);
    assert!(u.modes().filter(|(k, _)| *k != (0, 0)).all(|(_, c)| c.norm() == 0.0));
}

#[test]
fn cameron_martin_constant_one() {
    let t = table(Preset::TunedSextic, 16);
    let mut worst: f64 = 0.0;
    for s in 0..100u64 {
        let dim = DriftProfile::dim(8);
        let p: Vec<f64> = (0..dim).map(|i| ((s * 131 + i as u64 * 17) as f64 * 0.618).sin()).collect();
        worst = worst.max(cameron_martin_ratio(&drift(8, p), &t));
    }
    assert!(worst <= 1.0, "{worst}");
}

#[test]
fn violating_minimum_beats_constant_drift() {
    let t = table(Preset::ViolatingSextic, 16);
    let init = DriftProfile::constant(8, 16f64.powf(t.beta()));
    let m = minimize(&t, &init, &MinimizeOptions::default()).unwrap();
    assert!(m.objective <= objective(&init, &t).unwrap());
    assert!(m.objective <= 0.5 * counterexample_bound(&t, 1.0));
}

#[test]
fn shift_identity_against_mc() {
    let t = table(Preset::TunedSextic, 8);
    let band = 4;
    let p: Vec<f64> = (0..DriftProfile::dim(band)).map(|i| 0.3 * (i as f64 * 0.7).cos()).collect();
    let d = drift(band, p);
    let closed = objective(&d, &t).unwrap() - 0.5 * d.energy();
    let lat = Lattice::for_degree(8, 0.9, 6, Exactness::Integral).unwrap();
    let u = shifted_field(&d, lat, 8);
    let vals: Vec<f64> = (0..4000)
        .map(|i| {
            let w = sample_mu(&lat, SeededStream::new(88, i));
            potential_integral(&w.add(&u), &t, Variant::Measure).unwrap()
        })
        .collect();
    let (m, se) = fracwave_core::stats::mean_se(&vals);
    assert!((m - closed).abs() < 3.0 * se, "{m} ± {se} vs {closed}");
}

#[test]
fn band_above_cutoff_is_rejected() {
    let t = table(Preset::TunedSextic, 4);
    assert!(objective(&DriftProfile::zero(8), &t).is_err());
}

#[test]
fn drift_modes_follow_sampling_order() {
    assert_eq!(DriftProfile::dim(3), 1 + 2 * mode_order(3).len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn objective_is_even(seed in 0u64..1000) {
        let t = table(Preset::TunedSextic, 16);
        let p: Vec<f64> = (0..DriftProfile::dim(4))
            .map(|i| ((seed * 7 + i as u64) as f64 * 1.31).sin() * 0.6)
            .collect();
        let d = drift(4, p);
        let a = objective(&d, &t).unwrap();
        let b = objective(&d.neg(), &t).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_central_differences(seed in 0u64..1000) {
        let t = table(Preset::TunedSextic, 16);
        let p: Vec<f64> = (0..DriftProfile::dim(3))
            .map(|i| ((seed * 13 + i as u64) as f64 * 0.77).cos() * 0.5)
            .collect();
        let d = drift(3, p);
        let (_, g) = objective_grad(&d, &t).unwrap();
        let gmax = g.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for i in 0..g.len() {
            let h = 1e-5;
            let mut a = d.clone();
            a.params[i] += h;
            let mut b = d.clone();
            b.params[i] -= h;
            let fd = (objective(&a, &t).unwrap() - objective(&b, &t).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-3 * gmax));
        }
    }

    #[test]
    fn minimize_never_increases(seed in 0u64..1000) {
        let t = table(Preset::TunedQuartic, 8);
        let p: Vec<f64> = (0..DriftProfile::dim(2))
            .map(|i| ((seed + i as u64) as f64 * 2.1).sin())
            .collect();
        let d = drift(2, p);
        let opts = MinimizeOptions { max_iterations: 30, ..Default::default() };
        let m = minimize(&t, &d, &opts).unwrap();
        prop_assert!(m.objective <= objective(&d, &t).unwrap());
    }
}

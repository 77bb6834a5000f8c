use fracwave_core::analysis::{
    convolution_sum_oracle, corollary_sum, dispersive_kernel, wick_moment, ConvolutionCase,
};
use fracwave_core::Error;

#[test]
fn kernel_near_time_zero_counts_modes() {
    let k = dispersive_kernel(3, 1e-6, 0.9);
    assert!((k.sup - k.mass).abs() < 1e-3 * k.mass);
    assert!((k.sup_fine - k.sup).abs() < 0.02 * k.sup_fine);
}

#[test]
fn case_iii_ratio_bounded() {
    let k0 = [0usize, 1, 2, 4, 8, 16, 32];
    let r = convolution_sum_oracle(ConvolutionCase::III { eta1: 1.0, eta2: 3.0 }, &k0, 128).unwrap();
    assert!(r.saturation.bounded);
    assert!(r.ratios.iter().all(|x| x.is_finite() && *x > 0.0));
}

#[test]
fn case_iv_exponent() {
    let k0 = [0usize, 1, 2, 4, 8, 16, 32];
    // the local slope approaches -(2η - 2) = -1.2 from above; at |k₀| ≤ 32 it
    // is still pre-asymptotic
    let r = convolution_sum_oracle(ConvolutionCase::IV { n: 2, eta: 1.6 }, &k0, 64).unwrap();
    let local: Vec<f64> = r.sums[2..]
        .windows(2)
        .zip(r.k0[2..].windows(2))
        .map(|(s, k)| (s[1] / s[0]).ln() / (k[1] as f64 / k[0] as f64).ln())
        .collect();
    assert!(local.windows(2).all(|w| w[1] < w[0]), "{local:?}");
    let last = *local.last().unwrap();
    assert!(last > -1.2 && last < -1.0, "{local:?}");
    assert!(r.saturation.bounded);
}

#[test]
fn truncation_doubling_within_tail() {
    let k0 = [0usize, 4, 16];
    let case = ConvolutionCase::I { eta1: 1.0, eta2: 1.5 };
    let a = convolution_sum_oracle(case, &k0, 64).unwrap();
    let b = convolution_sum_oracle(case, &k0, 128).unwrap();
    for (x, y) in a.sums.iter().zip(&b.sums) {
        assert!((x - y).abs() <= a.tail);
    }
}

#[test]
fn conditions_are_enforced() {
    let r = convolution_sum_oracle(ConvolutionCase::I { eta1: 1.0, eta2: 2.5 }, &[0, 1], 16);
    assert!(matches!(r, Err(Error::ConditionViolated { .. })));
}

#[test]
fn moments_grow_with_power() {
    let a = wick_moment(0.9, 16, 1, 0.2).unwrap();
    let b = wick_moment(0.9, 16, 2, 0.3).unwrap();
    assert!(a > 0.0 && b > 0.0);
}

#[test]
fn corollary_sum_positive() {
    let v = corollary_sum(0.9, 0.05, 2, 1, 8, 16).unwrap();
    assert!(v.is_finite() && v > 0.0);
}

//! Summation, Monte Carlo summaries and small least-squares fits.

use serde::{Deserialize, Serialize};

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Pairwise sum; the reduction tree depends only on the length.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

pub fn mean(x: &[f64]) -> f64 {
    pairwise_sum(x) / x.len() as f64
}

/// Sample mean and standard error of the mean.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = mean(x);
    if x.len() < 2 {
        return (m, f64::NAN);
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Effective sample size fraction for weighted estimators, 1 otherwise.
    pub ess_fraction: f64,
    pub estimator: Estimator,
    /// Excess kurtosis of the normalised weights (0 for unweighted).
    pub weight_kurtosis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Plain sample mean.
    Mean,
    /// `log` of the mean of `e^{-F}`, delta-method error.
    LogMeanExp,
    /// As above with the zero Fourier mode integrated out per sample.
    LogMeanExpZeroMode,
    /// Mean of a per-sample quantity with the zero mode integrated out.
    MeanZeroMode,
    /// Self-normalised importance sampling.
    SelfNormalised,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Mean => "mean",
            Estimator::LogMeanExp => "log-mean-exp",
            Estimator::LogMeanExpZeroMode => "log-mean-exp-zero-mode",
            Estimator::MeanZeroMode => "mean-zero-mode",
            Estimator::SelfNormalised => "self-normalised",
        }
    }
}

/// Summary of log-weights `l_i`: `log mean e^{l_i}` with delta-method error,
/// ESS fraction and weight kurtosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWeightSummary {
    pub log_mean: f64,
    pub std_error: f64,
    pub ess_fraction: f64,
    pub kurtosis: f64,
}

pub fn summarize_log_weights(l: &[f64]) -> LogWeightSummary {
    let n = l.len() as f64;
    let mx = l.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !mx.is_finite() {
        return LogWeightSummary {
            log_mean: mx,
            std_error: f64::NAN,
            ess_fraction: 0.0,
            kurtosis: f64::NAN,
        };
    }
    let w: Vec<f64> = l.iter().map(|x| (x - mx).exp()).collect();
    let (wm, wse) = mean_se(&w);
    let w2: Vec<f64> = w.iter().map(|x| x * x).collect();
    let s1 = pairwise_sum(&w);
    let s2 = pairwise_sum(&w2);
    let ess = s1 * s1 / s2 / n;
    let c2: Vec<f64> = w.iter().map(|x| (x - wm).powi(2)).collect();
    let c4: Vec<f64> = w.iter().map(|x| (x - wm).powi(4)).collect();
    let m2 = pairwise_sum(&c2) / n;
    let m4 = pairwise_sum(&c4) / n;
    let kurtosis = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 };
    LogWeightSummary {
        log_mean: mx + wm.ln(),
        std_error: wse / wm,
        ess_fraction: ess,
        kurtosis,
    }
}

/// `log ∫ e^{f}` from values on a uniform grid with spacing `h` (trapezoid).
pub fn log_trapezoid(values: &[f64], h: f64) -> f64 {
    let mx = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let n = values.len();
    let mut s = 0.0;
    for (i, v) in values.iter().enumerate() {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        s += w * (v - mx).exp();
    }
    mx + (s * h).ln()
}

/// Least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}

/// Fit `log|y| = c + p log x`; the slope is the power `p`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    linear_fit(&lx, &ly)
}

/// Wilson score interval for a binomial proportion at `z` standard errors.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Verdict on whether a sequence sampled at dyadic points levels off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    /// Successive log-increments `log(v_{i+1}/v_i)`.
    pub increments: Vec<f64>,
    /// Ratio of the last two positive increments (`< 1` means shrinking).
    pub contraction: f64,
    /// Geometric extrapolation of the limit.
    pub limit: f64,
    pub bounded: bool,
}

/// A positive sequence on a dyadic ladder is judged bounded when its last
/// log-increment is non-positive, or when the last two increments shrink
/// geometrically so that their series converges.
pub fn dyadic_saturation(values: &[f64]) -> Saturation {
    let inc: Vec<f64> = values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let last = *values.last().unwrap_or(&f64::NAN);
    let k = inc.len();
    if k == 0 {
        return Saturation {
            increments: inc,
            contraction: f64::NAN,
            limit: last,
            bounded: false,
        };
    }
    let d1 = inc[k - 1];
    if d1 <= 0.0 {
        return Saturation {
            increments: inc,
            contraction: 0.0,
            limit: last,
            bounded: true,
        };
    }
    if k < 2 {
        return Saturation {
            increments: inc,
            contraction: f64::NAN,
            limit: f64::INFINITY,
            bounded: false,
        };
    }
    let d0 = inc[k - 2];
    let q = if d0 > 0.0 { d1 / d0 } else { 0.0 };
    let (limit, bounded) = if q < 1.0 {
        (last * (d1 * q / (1.0 - q)).exp(), true)
    } else {
        (f64::INFINITY, false)
    };
    Saturation {
        increments: inc,
        contraction: q,
        limit,
        bounded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_beats_naive() {
        let mut s = NeumaierSum::default();
        for x in [1e16, 1.0, -1e16] {
            s.add(x);
        }
        assert_eq!(s.total(), 1.0);
    }

    #[test]
    fn fit_exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[1.0, 3.0, 5.0]);
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn log_weights_of_constants() {
        let s = summarize_log_weights(&[0.3; 10]);
        assert!((s.log_mean - 0.3).abs() < 1e-15);
        assert_eq!(s.std_error, 0.0);
        assert!((s.ess_fraction - 1.0).abs() < 1e-15);
    }

    #[test]
    fn saturation_cases() {
        assert!(dyadic_saturation(&[1.0, 1.5, 1.75, 1.85]).bounded);
        assert!(!dyadic_saturation(&[1.0, 2.0, 4.0, 8.0]).bounded);
        assert!(dyadic_saturation(&[3.0, 2.0, 1.0]).bounded);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && hi > 0.3);
    }
}

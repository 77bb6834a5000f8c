//! Gibbs weights `e^{-∫Ṽ_N}` against the Gaussian measure: potential
//! integrals, partition functions, density gaps, the counterexample bound
//! and tail probabilities of the renormalised potential.
//!
//! The zero Fourier mode of a `μ` sample is a single real normal with
//! variance `1/4π²` and is only confined by the potential. Estimators with
//! the `ZeroMode` flavour integrate it out per sample: with `φ = c + φ_rest`
//! the functional is a polynomial in `c` whose coefficients are chaos
//! integrals of `φ_rest`, and the one-dimensional Gaussian integral is done
//! by the trapezoid rule.

mod functional;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use functional::{
    chaos_integrals, coercivity_fit, potential_integral, CoeffSource, CoercivityFit, Variant,
    WickFunctional,
};

use crate::error::{Error, Result};
use crate::renorm::{PotentialSpec, RenormTable};
use crate::sampling::{sample_mu, SeededStream};
use crate::spectral::{Exactness, Lattice, SpectralField};
use crate::stats::{
    loglog_fit, mean_se, summarize_log_weights, wilson_interval, Estimator, LinearFit, McEstimate,
};

/// Weights below this fraction of the sample size are rejected.
pub const ESS_THRESHOLD: f64 = 0.01;
/// Excess kurtosis of the weights above which the mean is flagged.
pub const KURTOSIS_WARNING: f64 = 50.0;

/// Monte Carlo settings shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Integrate the zero mode out analytically (default) or sample it.
    pub zero_mode: bool,
    pub ess_threshold: f64,
}

impl McConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            zero_mode: true,
            ess_threshold: ESS_THRESHOLD,
        }
    }

    pub fn plain(mut self) -> Self {
        self.zero_mode = false;
        self
    }
}

impl McEstimate {
    /// Heavy-tailed weights make the delta-method error unreliable.
    pub fn kurtosis_warning(&self) -> bool {
        self.weight_kurtosis > KURTOSIS_WARNING
    }
}

/// Trapezoid rule for `E[f(g/2π)]`, `g ~ N(0,1)`, in log form. The window
/// `[-L, L]` doubles until the integrand is negligible at both ends.
struct ZeroModeRule {
    half_width: f64,
    points: usize,
}

const ZERO_MODE_START: ZeroModeRule = ZeroModeRule {
    half_width: 16.0,
    points: 6401,
};
const ZERO_MODE_MAX_WIDTH: f64 = 512.0;
const EDGE_DROP: f64 = 40.0;

fn poly(e: &[f64], c: f64) -> f64 {
    e.iter().rev().fold(0.0, |acc, v| acc * c + v)
}

/// Log-integrand values of `exp(h(g/2π)) φ(g)` on a window wide enough for
/// `h`, with the step.
fn zero_mode_grid(h: impl Fn(f64) -> f64) -> (Vec<f64>, f64, f64) {
    let mut rule = ZERO_MODE_START;
    loop {
        let step = 2.0 * rule.half_width / (rule.points - 1) as f64;
        let vals: Vec<f64> = (0..rule.points)
            .map(|i| {
                let g = -rule.half_width + i as f64 * step;
                h(g / (2.0 * PI)) - 0.5 * g * g
            })
            .collect();
        let mx = vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let edge = vals[0].max(vals[rule.points - 1]);
        if edge < mx - EDGE_DROP || rule.half_width >= ZERO_MODE_MAX_WIDTH {
            return (vals, step, rule.half_width);
        }
        rule = ZeroModeRule {
            half_width: 2.0 * rule.half_width,
            points: 2 * rule.points - 1,
        };
    }
}

/// `log E_g exp(h(g/2π))` for a log-integrand `h`.
fn log_zero_mode_expectation(h: impl Fn(f64) -> f64) -> f64 {
    let (vals, step, _) = zero_mode_grid(h);
    crate::stats::log_trapezoid(&vals, step) - 0.5 * (2.0 * PI).ln()
}

/// Draws the zero mode `c` from the density `∝ e^{-F(c)}` against its
/// Gaussian law, by inverting the trapezoid CDF at `u ∈ (0, 1)`. Returns
/// `(c, log E e^{-F})`.
pub fn zero_mode_conditional(e: &[f64], u: f64) -> (f64, f64) {
    let (vals, step, half_width) = zero_mode_grid(|c| -poly(e, c));
    let mx = vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let dens: Vec<f64> = vals.iter().map(|v| (v - mx).exp()).collect();
    let mut cdf = Vec::with_capacity(dens.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for w in dens.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * step;
        cdf.push(acc);
    }
    let log_norm = mx + acc.ln() - 0.5 * (2.0 * PI).ln();
    let target = u * acc;
    let i = cdf.partition_point(|&c| c < target).clamp(1, cdf.len() - 1);
    let (c0, c1) = (cdf[i - 1], cdf[i]);
    let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
    let g = -half_width + (i as f64 - 1.0 + frac) * step;
    (g / (2.0 * PI), log_norm)
}

/// Standard normal distribution function.
pub fn normal_cdf(g: f64) -> f64 {
    0.5 * libm::erfc(-g / std::f64::consts::SQRT_2)
}

/// `E_g |e^{-F₁(c)} - e^{-F₂(c)}|^p` over the zero mode.
fn zero_mode_gap(e1: &[f64], e2: &[f64], p: f64) -> f64 {
    let rule = ZERO_MODE_START;
    let step = 2.0 * rule.half_width / (rule.points - 1) as f64;
    let mut s = 0.0;
    for i in 0..rule.points {
        let g = -rule.half_width + i as f64 * step;
        let c = g / (2.0 * PI);
        let w = if i == 0 || i + 1 == rule.points { 0.5 } else { 1.0 };
        let d = ((-poly(e1, c)).exp() - (-poly(e2, c)).exp()).abs();
        s += w * d.powf(p) * (-0.5 * g * g).exp();
    }
    s * step / (2.0 * PI).sqrt()
}

/// Runs `f` on the physical samples of pairs of `μ` draws. Results come back
/// in sample order.
fn map_sample_pairs<T: Send>(
    lattice: &Lattice,
    cfg: &McConfig,
    prepare: impl Fn(SpectralField) -> SpectralField + Sync,
    f: impl Fn(&[f64]) -> T + Sync,
) -> Result<Vec<T>> {
    let n = cfg.n_samples;
    let pairs: Vec<Result<Vec<T>>> = (0..n.div_ceil(2))
        .into_par_iter()
        .map(|p| {
            let i = 2 * p;
            let a = prepare(sample_mu(lattice, SeededStream::new(cfg.seed, i as u64)));
            if i + 1 < n {
                let b = prepare(sample_mu(lattice, SeededStream::new(cfg.seed, i as u64 + 1)));
                let (xa, xb) = SpectralField::to_physical_pair(&a, &b)?;
                Ok(vec![f(&xa), f(&xb)])
            } else {
                Ok(vec![f(&a.to_physical()?)])
            }
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for r in pairs {
        out.extend(r?);
    }
    Ok(out)
}

fn without_zero_mode(mut f: SpectralField) -> SpectralField {
    f.set_pair(0, 0, num_complex::Complex64::new(0.0, 0.0));
    f
}

fn log_weight_estimate(
    log_w: &[f64],
    cfg: &McConfig,
    estimator: Estimator,
) -> Result<McEstimate> {
    let s = summarize_log_weights(log_w);
    let n = log_w.len() as f64;
    if !(s.ess_fraction >= cfg.ess_threshold) {
        return Err(Error::DegenerateWeights {
            ess: s.ess_fraction * n,
            threshold: cfg.ess_threshold * n,
        });
    }
    Ok(McEstimate {
        mean: s.log_mean,
        std_error: s.std_error,
        n_samples: log_w.len(),
        seed: cfg.seed,
        ess_fraction: s.ess_fraction,
        estimator,
        weight_kurtosis: s.kurtosis,
    })
}

/// Per-sample log-weights `log E[e^{-pF} | φ_rest]` (zero mode integrated)
/// or `-pF(φ)`.
pub fn log_weights(
    functional: &WickFunctional,
    lattice: &Lattice,
    p: f64,
    cfg: &McConfig,
) -> Result<Vec<f64>> {
    let d = functional.degree();
    let lat = lattice.regrid(d, Exactness::Integral);
    let area = lat.cell_area();
    if cfg.zero_mode {
        map_sample_pairs(&lat, cfg, without_zero_mode, |x| {
            let e = functional.zero_mode_poly(&chaos_integrals(x, functional.var, d, area));
            log_zero_mode_expectation(|c| -p * poly(&e, c))
        })
    } else {
        map_sample_pairs(&lat, cfg, |f| f, |x| -p * functional.integral_from_samples(x, area))
    }
}

/// `log Z_N^{(p)} = log E_μ e^{-p∫V(Π_N φ)}` for the chosen variant.
pub fn log_partition_mc(
    table: &RenormTable,
    variant: Variant,
    p: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    if p < 1.0 {
        return Err(Error::Config(format!("p = {p} must be at least 1")));
    }
    let f = WickFunctional::from_table(table, variant, CoeffSource::Truncated);
    let lattice = Lattice::new(table.n, 2 * table.n + 1, table.alpha)?;
    let lw = log_weights(&f, &lattice, p, cfg)?;
    let est = if cfg.zero_mode {
        Estimator::LogMeanExpZeroMode
    } else {
        Estimator::LogMeanExp
    };
    log_weight_estimate(&lw, cfg, est)
}

/// Plain mean of `∫V(Π_N φ)` over `μ`.
pub fn potential_mean_mc(table: &RenormTable, variant: Variant, cfg: &McConfig) -> Result<McEstimate> {
    let f = WickFunctional::from_table(table, variant, CoeffSource::Truncated);
    let lat = Lattice::for_degree(table.n, table.alpha, f.degree(), Exactness::Integral)?;
    let area = lat.cell_area();
    let v = map_sample_pairs(&lat, cfg, |f| f, |x| f.integral_from_samples(x, area))?;
    Ok(unweighted(&v, cfg.seed, Estimator::Mean))
}

fn unweighted(v: &[f64], seed: u64, estimator: Estimator) -> McEstimate {
    let (m, se) = mean_se(v);
    McEstimate {
        mean: m,
        std_error: se,
        n_samples: v.len(),
        seed,
        ess_fraction: 1.0,
        estimator,
        weight_kurtosis: 0.0,
    }
}

/// `E_μ |e^{-F_N(Π_N φ)} - e^{-F_ref(φ)}|^p` on samples drawn at the
/// reference cutoff, where `F_ref = ā₂∫φ⋄4 - ½∫φ⋄2` uses the reference
/// variance. `source` picks truncated or frozen coefficients for `F_N`.
pub fn density_gap_mc(
    table_n: &RenormTable,
    reference_n: usize,
    p: f64,
    source: CoeffSource,
    cfg: &McConfig,
) -> Result<McEstimate> {
    if reference_n < table_n.n {
        return Err(Error::Config(format!(
            "reference cutoff {reference_n} is below N = {}",
            table_n.n
        )));
    }
    let fn_ = WickFunctional::from_table(table_n, Variant::Measure, source);
    let var_ref = crate::renorm::sigma_tilde_sq(table_n.alpha, reference_n);
    let fref = WickFunctional::limit_density(table_n.lambda_measure, var_ref);
    let d = fn_.degree().max(fref.degree());
    let lat = Lattice::for_degree(reference_n, table_n.alpha, d, Exactness::Integral)?;
    let area = lat.cell_area();
    let n = table_n.n;
    let gaps: Vec<Result<f64>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let phi = sample_mu(&lat, SeededStream::new(cfg.seed, i as u64));
            if cfg.zero_mode {
                let rest = without_zero_mode(phi);
                let proj = rest.project(n);
                let (xn, xr) = SpectralField::to_physical_pair(&proj, &rest)?;
                let e1 = fn_.zero_mode_poly(&chaos_integrals(&xn, fn_.var, fn_.degree(), area));
                let e2 = fref.zero_mode_poly(&chaos_integrals(&xr, fref.var, fref.degree(), area));
                Ok(zero_mode_gap(&e1, &e2, p))
            } else {
                let proj = phi.project(n);
                let (xn, xr) = SpectralField::to_physical_pair(&proj, &phi)?;
                let a = (-fn_.integral_from_samples(&xn, area)).exp();
                let b = (-fref.integral_from_samples(&xr, area)).exp();
                Ok((a - b).abs().powf(p))
            }
        })
        .collect();
    let v: Vec<f64> = gaps.into_iter().collect::<Result<_>>()?;
    let est = if cfg.zero_mode {
        Estimator::MeanZeroMode
    } else {
        Estimator::Mean
    };
    Ok(unweighted(&v, cfg.seed, est))
}

/// One row of the counterexample table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub n: usize,
    /// Upper bound on `-log Z_N`.
    pub bound: f64,
    /// Drift amplitude `θ N^{1-α}`.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleGrowth {
    pub alpha: f64,
    pub theta: f64,
    pub rows: Vec<CounterexampleRow>,
    /// Power-law fit of `-bound` against `N`, when every bound is negative.
    pub fit: Option<LinearFit>,
}

/// Closed-form value of the variational objective at the constant drift
/// `U = θN^{1-α}`: only the top chaos of each Wick power survives the
/// expectation, and the `-½U²` from the mass term cancels the drift energy
/// `½·4π²U²`. What remains is `4π² Σ_{j≥2} ā_{j,N} N^{-(2j-4)β} U^{2j}`.
pub fn counterexample_bound(table: &RenormTable, theta: f64) -> f64 {
    let u = theta * (table.n as f64).powf(table.beta());
    let s: f64 = (2..=table.m())
        .map(|j| table.wick_coeff(j) * u.powi(2 * j as i32))
        .sum();
    4.0 * PI * PI * s
}

pub fn counterexample_growth(
    spec: &PotentialSpec,
    alpha: f64,
    theta: f64,
    n_ladder: &[usize],
) -> Result<CounterexampleGrowth> {
    if theta != 0.0 && spec.averaged_positivity_at(alpha, theta) >= 0.0 {
        return Err(Error::PositivityHolds { theta });
    }
    let mut rows = Vec::with_capacity(n_ladder.len());
    for &n in n_ladder {
        let t = RenormTable::new(spec, alpha, n)?;
        rows.push(CounterexampleRow {
            n,
            bound: counterexample_bound(&t, theta),
            drift: theta * (n as f64).powf(1.0 - alpha),
        });
    }
    let fit = if rows.len() >= 2 && rows.iter().all(|r| r.bound < 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let y: Vec<f64> = rows.iter().map(|r| -r.bound).collect();
        Some(loglog_fit(&x, &y))
    } else {
        None
    };
    Ok(CounterexampleGrowth {
        alpha,
        theta,
        rows,
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub r: f64,
    pub probability: f64,
    pub lower: f64,
    pub upper: f64,
    pub exceed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub n: usize,
    pub n_samples: usize,
    pub points: Vec<TailPoint>,
    /// Slope of `log(-log P)` against `log R` over resolvable points.
    pub fit: Option<LinearFit>,
    /// `1/(2m)`.
    pub reference_exponent: f64,
}

/// Smallest number of exceedances for a point to enter the fit.
pub const TAIL_MIN_COUNT: usize = 10;

/// Empirical `P(|∫V(Π_N φ)| > R)` with 95% Wilson intervals.
pub fn tail_probability(
    table: &RenormTable,
    variant: Variant,
    r_ladder: &[f64],
    cfg: &McConfig,
) -> Result<TailCurve> {
    let f = WickFunctional::from_table(table, variant, CoeffSource::Truncated);
    let lat = Lattice::for_degree(table.n, table.alpha, f.degree(), Exactness::Integral)?;
    let area = lat.cell_area();
    let v = map_sample_pairs(&lat, cfg, |f| f, |x| f.integral_from_samples(x, area).abs())?;
    let n = v.len();
    let points: Vec<TailPoint> = r_ladder
        .iter()
        .map(|&r| {
            let exceed = v.iter().filter(|x| **x > r).count();
            let (lower, upper) = wilson_interval(exceed, n, 1.96);
            TailPoint {
                r,
                probability: exceed as f64 / n as f64,
                lower,
                upper,
                exceed,
            }
        })
        .collect();
    let usable: Vec<&TailPoint> = points
        .iter()
        .filter(|p| p.exceed >= TAIL_MIN_COUNT && p.probability <= 0.5 && p.r > 0.0)
        .collect();
    let fit = (usable.len() >= 2).then(|| {
        let x: Vec<f64> = usable.iter().map(|p| p.r.ln()).collect();
        let y: Vec<f64> = usable.iter().map(|p| (-p.probability.ln()).ln()).collect();
        crate::stats::linear_fit(&x, &y)
    });
    Ok(TailCurve {
        n: table.n,
        n_samples: n,
        points,
        fit,
        reference_exponent: 1.0 / (2 * table.m()) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renorm::Preset;

    #[test]
    fn zero_mode_rule_normalised() {
        let v = log_zero_mode_expectation(|_| 0.0);
        assert!(v.abs() < 1e-12);
        // E exp(t g) = exp(t²/2) with c = g/2π
        let t = 0.7;
        let v = log_zero_mode_expectation(|c| t * 2.0 * PI * c);
        assert!((v - 0.5 * t * t).abs() < 1e-10);
    }

    #[test]
    fn conditional_zero_mode_of_gaussian() {
        // F = 0: the draw is the Gaussian quantile, the normaliser is 1
        let (c, ln) = zero_mode_conditional(&[0.0], normal_cdf(1.3));
        assert!((2.0 * PI * c - 1.3).abs() < 1e-4);
        assert!(ln.abs() < 1e-10);
    }

    #[test]
    fn zero_functional_gives_zero() {
        let l = Lattice::new(4, 9, 0.9).unwrap();
        let cfg = McConfig::new(20, 3);
        let lw = log_weights(&WickFunctional::zero(), &l, 1.0, &cfg).unwrap();
        assert!(lw.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_mode_matches_plain_on_average() {
        let spec = Preset::TunedQuartic.spec(0.9);
        let t = RenormTable::new(&spec, 0.9, 4).unwrap();
        let cfg = McConfig::new(4000, 5);
        let a = log_partition_mc(&t, Variant::Measure, 1.0, &cfg).unwrap();
        let b = log_partition_mc(&t, Variant::Measure, 1.0, &cfg.plain()).unwrap();
        let pooled = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() < 4.0 * pooled, "{a:?} {b:?}");
    }

    #[test]
    fn theta_zero_bound() {
        let spec = Preset::ViolatingSextic.spec(0.9);
        let g = counterexample_growth(&spec, 0.9, 0.0, &[8, 16]).unwrap();
        assert!(g.rows.iter().all(|r| r.bound == 0.0));
    }
}

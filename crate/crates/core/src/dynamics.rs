//! Truncated renormalised wave dynamics and its cubic limit.
//!
//! Both equations are written as `∂²u + D^{2α}u + c·u + Π_N G(Π_N u) = 0`
//! with `G = Σ_l w_l H_l(·; σ̃_N²)` and a linear coefficient `c`. In the
//! shifted convention the propagator uses `ω = √(1+|k|^{2α})` and the force
//! carries `c - 1`; in the unshifted one `ω = |k|^α` and the force carries
//! `c`. The two solve the same equation. The integrator is Strang splitting
//! with the exact linear flow and a velocity kick.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{
    chaos_integrals, normal_cdf, zero_mode_conditional, CoeffSource, Variant, WickFunctional,
};
use crate::renorm::{hermite_all, RenormTable};
use crate::sampling::{
    position_gaussians, sample_mu_with, sample_white, InitialDataConvention, SeededStream,
};
use crate::spectral::{Exactness, Lattice, SpectralField};
use crate::stats::{median, summarize_log_weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    /// `G = Σ_{j≥2} ā_{j,N} N^{-(2j-4)β} 2j H_{2j-1}`.
    FullPotential,
    /// `G = 4ā₂ H_3`.
    CubicLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassConvention {
    #[default]
    Shifted,
    Unshifted,
}

/// Frequency of the linear propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearMass {
    /// `ω = √(1+|k|^{2α})`.
    WithOne,
    /// `ω = |k|^α`; the zero mode moves as `u + t·v`.
    Without,
}

impl MassConvention {
    fn linear_mass(self) -> LinearMass {
        match self {
            MassConvention::Shifted => LinearMass::WithOne,
            MassConvention::Unshifted => LinearMass::Without,
        }
    }
}

/// Position and velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairState {
    pub u: SpectralField,
    pub v: SpectralField,
}

impl PairState {
    pub fn new(u: SpectralField, v: SpectralField) -> Result<Self> {
        if u.band() != v.band() || u.lattice() != v.lattice() {
            return Err(Error::LatticeMismatch);
        }
        Ok(Self { u, v })
    }

    pub fn neg(&self) -> Self {
        Self {
            u: self.u.scale(-1.0),
            v: self.v.scale(-1.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// Per-mode energies `|v_k|² + ω_k²|u_k|²`, in storage order.
    pub fn mode_energies(&self, mass: LinearMass) -> Vec<f64> {
        let alpha = self.u.lattice().alpha();
        self.u
            .modes()
            .zip(self.v.modes())
            .map(|(((k1, k2), u), (_, v))| {
                let w = omega(alpha, mass, k1, k2);
                v.norm_sqr() + w * w * u.norm_sqr()
            })
            .collect()
    }
}

fn omega(alpha: f64, mass: LinearMass, k1: i64, k2: i64) -> f64 {
    let p = ((k1 * k1 + k2 * k2) as f64).powf(alpha);
    match mass {
        LinearMass::WithOne => (1.0 + p).sqrt(),
        LinearMass::Without => p.sqrt(),
    }
}

/// Exact solution of `∂²u + ω²u = 0` over time `t`, mode by mode.
pub fn linear_flow(state: &PairState, t: f64, mass: LinearMass) -> PairState {
    let alpha = state.u.lattice().alpha();
    let band = state.u.band();
    let b = band as i64;
    let mut u = SpectralField::zeros(*state.u.lattice(), band);
    let mut v = SpectralField::zeros(*state.u.lattice(), band);
    for k1 in -b..=b {
        for k2 in -b..=b {
            if k1 * k1 + k2 * k2 > b * b {
                continue;
            }
            let (u0, v0) = (state.u.coeff(k1, k2), state.v.coeff(k1, k2));
            let w = omega(alpha, mass, k1, k2);
            let (un, vn) = if w == 0.0 {
                (u0 + v0 * t, v0)
            } else {
                let (s, c) = (w * t).sin_cos();
                (u0 * c + v0 * (s / w), -u0 * (w * s) + v0 * c)
            };
            set(&mut u, k1, k2, un);
            set(&mut v, k1, k2, vn);
        }
    }
    PairState { u, v }
}

fn set(f: &mut SpectralField, k1: i64, k2: i64, c: Complex64) {
    let b = f.band() as i64;
    let i = ((k1 + b) * (2 * b + 1) + (k2 + b)) as usize;
    f.coeffs_mut()[i] = c;
}

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub output_stride: usize,
    pub equation: Equation,
    pub mass_convention: MassConvention,
    /// Coefficient `c` of `u` in the unshifted equation. `None` picks
    /// `2ā_{1,N}N^{2β} = κ_N + 1` for the full potential and `2λ₀` for the
    /// cubic limit.
    pub linear_coeff: Option<f64>,
    pub coefficients: CoeffSource,
}

/// Default time step; the linear part is exact so it does not depend on `N`.
pub const DEFAULT_DT: f64 = 1e-3;

impl EvolutionConfig {
    pub fn new(equation: Equation, dt: f64, t_final: f64, output_stride: usize) -> Self {
        Self {
            dt,
            t_final,
            output_stride,
            equation,
            mass_convention: MassConvention::Shifted,
            linear_coeff: None,
            coefficients: CoeffSource::Truncated,
        }
    }

    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || self.output_stride == 0 || !(self.t_final >= 0.0) {
            return Err(Error::Config("dt, stride and t_final must be positive".into()));
        }
        let n = (self.t_final / self.dt).round();
        let chunk = self.dt * self.output_stride as f64;
        let outputs = (self.t_final / chunk).round();
        if (outputs * chunk - self.t_final).abs() > 1e-12 * self.t_final.max(1.0)
            || (n * self.dt - self.t_final).abs() > 1e-12 * self.t_final.max(1.0)
        {
            return Err(Error::Config(format!(
                "dt·stride = {chunk} does not divide t_final = {}",
                self.t_final
            )));
        }
        Ok(n as usize)
    }
}

/// Force evaluator for one equation at one cutoff.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub table: RenormTable,
    pub equation: Equation,
    pub convention: MassConvention,
    pub linear_coeff: f64,
    /// Weights of `H_l` in `G`.
    pub weights: Vec<f64>,
    pub var: f64,
    pub lattice: Lattice,
}

impl Dynamics {
    pub fn new(table: &RenormTable, cfg: &EvolutionConfig) -> Result<Self> {
        let m = table.m();
        let coeff = |j: usize| match cfg.coefficients {
            CoeffSource::Truncated => table.wick_coeff(j),
            CoeffSource::Limit => table.wick_coeff_limit(j),
        };
        let (weights, default_lin) = match cfg.equation {
            Equation::FullPotential => {
                let mut w = vec![0.0; 2 * m.max(2)];
                for j in 2..=m {
                    w[2 * j - 1] = coeff(j) * (2 * j) as f64;
                }
                (w, 2.0 * coeff(1))
            }
            Equation::CubicLimit => {
                (vec![0.0, 0.0, 0.0, table.lambda_cubic], 2.0 * table.lambda_0)
            }
        };
        let degree = weights.iter().rposition(|w| *w != 0.0).unwrap_or(1).max(1);
        let lattice = Lattice::for_degree(table.n, table.alpha, degree + 1, Exactness::Integral)?;
        Ok(Self {
            table: table.clone(),
            equation: cfg.equation,
            convention: cfg.mass_convention,
            linear_coeff: cfg.linear_coeff.unwrap_or(default_lin),
            weights,
            var: table.sigma_tilde_n_sq,
            lattice,
        })
    }

    pub fn n(&self) -> usize {
        self.table.n
    }

    fn force_linear(&self) -> f64 {
        match self.convention {
            MassConvention::Shifted => self.linear_coeff - 1.0,
            MassConvention::Unshifted => self.linear_coeff,
        }
    }

    /// `Π_N(c'·u + G(Π_N u))` with `c'` the convention's linear coefficient.
    pub fn force(&self, u: &SpectralField) -> Result<SpectralField> {
        let u = u.project(self.n()).relattice(self.lattice);
        let x = u.to_physical()?;
        let d = self.weights.len() - 1;
        let lin = self.force_linear();
        let mut h = vec![0.0; d + 1];
        let y: Vec<f64> = x
            .iter()
            .map(|&xv| {
                hermite_all(d, xv, self.var, &mut h);
                lin * xv + self.weights.iter().zip(&h).map(|(w, hv)| w * hv).sum::<f64>()
            })
            .collect();
        SpectralField::from_physical(self.lattice, self.n(), &y)
    }

    /// `½∫v² + ½∫|D^α u|² + ½c∫u² + ∫W(u)` with `W' = G`.
    pub fn energy(&self, state: &PairState) -> Result<f64> {
        let alpha = self.table.alpha;
        let four_pi2 = 4.0 * PI * PI;
        let c = self.linear_coeff;
        let quad: f64 = state
            .u
            .modes()
            .zip(state.v.modes())
            .map(|(((k1, k2), u), (_, v))| {
                let p = ((k1 * k1 + k2 * k2) as f64).powf(alpha);
                v.norm_sqr() + (p + c) * u.norm_sqr()
            })
            .sum();
        let mut w = vec![0.0; self.weights.len() + 1];
        for (l, g) in self.weights.iter().enumerate() {
            w[l + 1] = g / (l + 1) as f64;
        }
        let pot = WickFunctional::new(w, self.var)
            .integral(&state.u.project(self.n()).relattice(self.lattice))?;
        Ok(0.5 * four_pi2 * quad + pot)
    }

    /// One Strang step of size `dt` (negative steps run backwards).
    pub fn step(&self, state: &PairState, dt: f64) -> Result<PairState> {
        let mass = self.convention.linear_mass();
        let mut s = linear_flow(state, 0.5 * dt, mass);
        let f = self.force(&s.u)?.relattice(*s.v.lattice());
        s.v = s.v.axpy(-dt, &f);
        Ok(linear_flow(&s, 0.5 * dt, mass))
    }
}

/// `Π_N G(Π_N u)` plus the linear term, with default settings.
pub fn nonlinear_force(u: &SpectralField, table: &RenormTable, equation: Equation) -> Result<SpectralField> {
    let cfg = EvolutionConfig::new(equation, DEFAULT_DT, 0.0, 1);
    Dynamics::new(table, &cfg)?.force(u)
}

/// Integrates from `state`, calling `observe(t, state)` at every output time
/// including `t = 0`. Returns the output states.
pub fn evolve(
    state: &PairState,
    table: &RenormTable,
    cfg: &EvolutionConfig,
    mut observe: impl FnMut(f64, &PairState),
) -> Result<Vec<(f64, PairState)>> {
    let dynamics = Dynamics::new(table, cfg)?;
    evolve_with(&dynamics, state, cfg, |t, s| {
        observe(t, s);
        true
    })
}

/// As [`evolve`] with a prepared [`Dynamics`]; outputs are only stored when
/// `observe` returns true.
pub fn evolve_with(
    dynamics: &Dynamics,
    state: &PairState,
    cfg: &EvolutionConfig,
    mut observe: impl FnMut(f64, &PairState) -> bool,
) -> Result<Vec<(f64, PairState)>> {
    let steps = cfg.steps()?;
    let mut s = state.clone();
    let mut out = Vec::new();
    if observe(0.0, &s) {
        out.push((0.0, s.clone()));
    }
    for i in 1..=steps {
        s = dynamics.step(&s, cfg.dt)?;
        let t = i as f64 * cfg.dt;
        if !s.is_finite() {
            return Err(Error::NonFinite { t });
        }
        if i % cfg.output_stride == 0 && observe(t, &s) {
            out.push((t, s.clone()));
        }
    }
    Ok(out)
}

/// Initial data `(Π_N φ, Π_N ψ)` with `φ ~ μ`, `ψ` white noise.
pub fn initial_data(
    lattice: &Lattice,
    stream: SeededStream,
    convention: InitialDataConvention,
) -> PairState {
    PairState {
        u: sample_mu_with(lattice, stream, convention),
        v: sample_white(lattice, stream),
    }
}

/// Sup over output times of `‖u_N - v_N‖_{H^σ}` at one cutoff and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub seed: u64,
    pub sup_diff: f64,
    /// `sup_t ‖u_N - S(t)(φ, ψ)‖_{H^{s₁}}`.
    pub sup_remainder: f64,
    /// `sup_t ‖u_N‖_{H^{s₁}}`.
    pub sup_solution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub sobolev_sigma: f64,
    pub smooth_index: f64,
    pub rows: Vec<ConvergenceRow>,
    /// `(N, median over seeds of sup_diff)`.
    pub medians: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub dt: f64,
    pub t_final: f64,
    pub output_stride: usize,
    pub sobolev_sigma: f64,
    /// `s₁` for the remainder check.
    pub smooth_index: f64,
    pub convention: InitialDataConvention,
    pub coefficients: CoeffSource,
    /// Override of the cubic equation's linear coefficient.
    pub cubic_linear_coeff: Option<f64>,
    /// Override of the full equation's linear coefficient.
    pub full_linear_coeff: Option<f64>,
}

impl ConvergenceConfig {
    pub fn new(alpha: f64, dt: f64, t_final: f64, output_stride: usize) -> Self {
        let eps = 0.05;
        Self {
            dt,
            t_final,
            output_stride,
            sobolev_sigma: alpha - 1.0 - eps,
            smooth_index: 4.0 * alpha - 3.0 - 3.0 * eps,
            convention: InitialDataConvention::TwoAlpha,
            coefficients: CoeffSource::Truncated,
            cubic_linear_coeff: None,
            full_linear_coeff: None,
        }
    }
}

/// Evolves the full and cubic equations from the same data for every
/// `(N, seed)` and records the distance between them.
pub fn convergence_experiment(
    tables: &[RenormTable],
    seeds: &[u64],
    cfg: &ConvergenceConfig,
) -> Result<ConvergenceReport> {
    let alpha = tables.first().map(|t| t.alpha).ok_or(Error::ZeroCutoff)?;
    if !(cfg.sobolev_sigma < alpha - 1.0) {
        return Err(Error::Config(format!(
            "sobolev index {} must be below α - 1 = {}",
            cfg.sobolev_sigma,
            alpha - 1.0
        )));
    }
    let tasks: Vec<(usize, u64)> = (0..tables.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let rows: Vec<Result<ConvergenceRow>> = tasks
        .par_iter()
        .map(|&(i, seed)| convergence_row(&tables[i], seed, cfg))
        .collect();
    let rows: Vec<ConvergenceRow> = rows.into_iter().collect::<Result<_>>()?;
    let medians = tables
        .iter()
        .map(|t| {
            let v: Vec<f64> = rows.iter().filter(|r| r.n == t.n).map(|r| r.sup_diff).collect();
            (t.n, median(&v))
        })
        .collect();
    Ok(ConvergenceReport {
        alpha,
        sobolev_sigma: cfg.sobolev_sigma,
        smooth_index: cfg.smooth_index,
        rows,
        medians,
    })
}

fn convergence_row(table: &RenormTable, seed: u64, cfg: &ConvergenceConfig) -> Result<ConvergenceRow> {
    let mk = |equation, linear_coeff| EvolutionConfig {
        linear_coeff,
        coefficients: cfg.coefficients,
        ..EvolutionConfig::new(equation, cfg.dt, cfg.t_final, cfg.output_stride)
    };
    let full_cfg = mk(Equation::FullPotential, cfg.full_linear_coeff);
    let cubic_cfg = mk(Equation::CubicLimit, cfg.cubic_linear_coeff);
    let full = Dynamics::new(table, &full_cfg)?;
    let cubic = Dynamics::new(table, &cubic_cfg)?;
    let lat = Lattice::new(table.n, 2 * table.n + 1, table.alpha)?;
    let data = initial_data(&lat, SeededStream::new(seed, 0), cfg.convention);
    let a = evolve_with(&full, &data, &full_cfg, |_, _| true)?;
    let b = evolve_with(&cubic, &data, &cubic_cfg, |_, _| true)?;
    let mut row = ConvergenceRow {
        n: table.n,
        seed,
        sup_diff: 0.0,
        sup_remainder: 0.0,
        sup_solution: 0.0,
    };
    let mass = full_cfg.mass_convention.linear_mass();
    for ((t, x), (_, y)) in a.iter().zip(&b) {
        let d = x.u.sub(&y.u.relattice(*x.u.lattice()));
        row.sup_diff = row.sup_diff.max(d.sobolev_norm(cfg.sobolev_sigma));
        let free = linear_flow(&data, *t, mass).u.relattice(*x.u.lattice());
        row.sup_remainder = row
            .sup_remainder
            .max(x.u.sub(&free).sobolev_norm(cfg.smooth_index));
        row.sup_solution = row.sup_solution.max(x.u.sobolev_norm(cfg.smooth_index));
    }
    Ok(row)
}

/// Observables compared by the invariance diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    L2NormSq,
    WickQuartic,
    TildePotential,
}

impl Observable {
    pub const ALL: [Observable; 3] = [
        Observable::L2NormSq,
        Observable::WickQuartic,
        Observable::TildePotential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::L2NormSq => "l2-norm-sq",
            Observable::WickQuartic => "wick-quartic",
            Observable::TildePotential => "tilde-potential",
        }
    }
}

/// Which flow and measure the diagnostic uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvarianceFlow {
    /// `ν_N ⊗ μ'` under the full truncated flow.
    Full,
    /// `μ ⊗ μ'` under the shifted linear flow.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceRow {
    pub observable: Observable,
    pub mean_initial: f64,
    pub mean_final: f64,
    pub difference: f64,
    pub std_error: f64,
    /// `difference / std_error`, 0 when both vanish.
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub n: usize,
    pub t_probe: f64,
    pub n_samples: usize,
    pub ess_fraction: f64,
    pub rows: Vec<InvarianceRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceConfig {
    pub t_probe: f64,
    pub dt: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub flow: InvarianceFlow,
    pub ess_threshold: f64,
}

/// Self-normalised importance sampling from `ν_N ⊗ μ'`. The zero mode of
/// each position sample is drawn from its exact conditional law given the
/// other modes (using `Φ(g_0)` of the sample's own zero-mode normal as the
/// uniform), so the weight is the conditional normaliser of `e^{-∫Ṽ_N}`.
pub fn invariance_diagnostic(table: &RenormTable, cfg: &InvarianceConfig) -> Result<InvarianceReport> {
    let evo = EvolutionConfig::new(Equation::FullPotential, cfg.dt, cfg.t_probe, 1);
    let steps = if cfg.t_probe == 0.0 { 0 } else { evo.steps()? };
    let dynamics = Dynamics::new(table, &evo)?;
    let tilde = WickFunctional::from_table(table, Variant::Tilde, CoeffSource::Truncated);
    let quartic = WickFunctional::new(vec![0.0, 0.0, 0.0, 0.0, 1.0], table.sigma_tilde_n_sq);
    let obs_lat = Lattice::for_degree(table.n, table.alpha, tilde.degree().max(4), Exactness::Integral)?;
    let area = obs_lat.cell_area();
    let sample_lat = Lattice::new(table.n, 2 * table.n + 1, table.alpha)?;
    let d = tilde.degree();
    let observe = |u: &SpectralField| -> Result<[f64; 3]> {
        let x = u.relattice(obs_lat).to_physical()?;
        Ok([
            u.l2_norm_sq(),
            quartic.integral_from_samples(&x, area),
            tilde.integral_from_samples(&x, area),
        ])
    };
    let per_sample: Vec<Result<(f64, [f64; 3], [f64; 3])>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let stream = SeededStream::new(cfg.seed, i as u64);
            let mut state = initial_data(&sample_lat, stream, InitialDataConvention::TwoAlpha);
            let log_w = match cfg.flow {
                InvarianceFlow::Linear => 0.0,
                InvarianceFlow::Full => {
                    let mut rest = state.u.clone();
                    rest.set_pair(0, 0, Complex64::new(0.0, 0.0));
                    let x = rest.relattice(obs_lat).to_physical()?;
                    let e = tilde.zero_mode_poly(&chaos_integrals(&x, tilde.var, d, area));
                    let g0 = position_gaussians(stream, 0).0;
                    let (c0, log_norm) = zero_mode_conditional(&e, normal_cdf(g0));
                    state.u.set_pair(0, 0, Complex64::new(c0, 0.0));
                    log_norm
                }
            };
            let o0 = observe(&state.u)?;
            let mut s = state;
            for k in 1..=steps {
                s = match cfg.flow {
                    InvarianceFlow::Full => dynamics.step(&s, cfg.dt)?,
                    InvarianceFlow::Linear => linear_flow(&s, cfg.dt, LinearMass::WithOne),
                };
                if !s.is_finite() {
                    return Err(Error::NonFinite { t: k as f64 * cfg.dt });
                }
            }
            let o1 = observe(&s.u)?;
            Ok((log_w, o0, o1))
        })
        .collect();
    let per_sample: Vec<(f64, [f64; 3], [f64; 3])> = per_sample.into_iter().collect::<Result<_>>()?;
    let log_w: Vec<f64> = per_sample.iter().map(|p| p.0).collect();
    let summary = summarize_log_weights(&log_w);
    let n = cfg.n_samples as f64;
    if !(summary.ess_fraction >= cfg.ess_threshold) {
        return Err(Error::DegenerateWeights {
            ess: summary.ess_fraction * n,
            threshold: cfg.ess_threshold * n,
        });
    }
    let mx = log_w.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let w: Vec<f64> = log_w.iter().map(|l| (l - mx).exp()).collect();
    let sw: f64 = w.iter().sum();
    let rows = Observable::ALL
        .iter()
        .enumerate()
        .map(|(j, &observable)| {
            let wmean = |f: &dyn Fn(&(f64, [f64; 3], [f64; 3])) -> f64| -> f64 {
                per_sample.iter().zip(&w).map(|(p, wi)| wi * f(p)).sum::<f64>() / sw
            };
            let m0 = wmean(&|p| p.1[j]);
            let m1 = wmean(&|p| p.2[j]);
            let diff = wmean(&|p| p.2[j] - p.1[j]);
            let var: f64 = per_sample
                .iter()
                .zip(&w)
                .map(|(p, wi)| (wi * (p.2[j] - p.1[j] - diff)).powi(2))
                .sum::<f64>()
                / (sw * sw);
            let se = var.sqrt();
            let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
            InvarianceRow {
                observable,
                mean_initial: m0,
                mean_final: m1,
                difference: diff,
                std_error: se,
                z_score: z,
            }
        })
        .collect();
    Ok(InvarianceReport {
        n: table.n,
        t_probe: cfg.t_probe,
        n_samples: cfg.n_samples,
        ess_fraction: summary.ess_fraction,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renorm::Preset;

    fn state(n: usize, seed: u64) -> PairState {
        let l = Lattice::new(n, 2 * n + 1, 0.9).unwrap();
        initial_data(&l, SeededStream::new(seed, 0), InitialDataConvention::TwoAlpha)
    }

    #[test]
    fn zero_mode_cosine() {
        let l = Lattice::new(2, 5, 0.9).unwrap();
        let u = SpectralField::constant(l, 1.0);
        let s = PairState::new(u.clone(), SpectralField::zeros(l, u.band())).unwrap();
        let out = linear_flow(&s, 0.7, LinearMass::WithOne);
        assert!((out.u.coeff(0, 0).re - 0.7f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn group_property() {
        let s = state(6, 2);
        let a = linear_flow(&linear_flow(&s, 0.3, LinearMass::WithOne), 0.5, LinearMass::WithOne);
        let b = linear_flow(&s, 0.8, LinearMass::WithOne);
        assert!(a.u.sub(&b.u).coeff_norm_sq().sqrt() < 1e-12);
        assert!(a.v.sub(&b.v).coeff_norm_sq().sqrt() < 1e-12);
    }

    #[test]
    fn conventions_agree_on_one_step() {
        let spec = Preset::TunedSextic.spec(0.9);
        let t = RenormTable::new(&spec, 0.9, 8).unwrap();
        let s = state(8, 4);
        let mut cfg = EvolutionConfig::new(Equation::FullPotential, 1e-3, 1e-3, 1);
        let a = Dynamics::new(&t, &cfg).unwrap().step(&s, 1e-3).unwrap();
        cfg.mass_convention = MassConvention::Unshifted;
        let b = Dynamics::new(&t, &cfg).unwrap().step(&s, 1e-3).unwrap();
        // the splittings differ at O(dt³)
        assert!(a.u.sub(&b.u).coeff_norm_sq().sqrt() < 1e-8);
    }

    #[test]
    fn time_reversible() {
        let spec = Preset::TunedQuartic.spec(0.9);
        let t = RenormTable::new(&spec, 0.9, 8).unwrap();
        let d = Dynamics::new(&t, &EvolutionConfig::new(Equation::FullPotential, 1e-2, 1.0, 1)).unwrap();
        let s = state(8, 9);
        let back = d.step(&d.step(&s, 1e-2).unwrap(), -1e-2).unwrap();
        assert!(back.u.sub(&s.u).coeff_norm_sq().sqrt() < 1e-10);
        assert!(back.v.sub(&s.v).coeff_norm_sq().sqrt() < 1e-10);
    }
}

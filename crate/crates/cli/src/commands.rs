//! One function per subcommand. Each writes its tables into the run
//! directory and leaves a short summary for the manifest.

use fracwave_core::analysis::{convolution_sum_oracle, kernel_decay, wick_moment_ladder, ConvolutionCase};
use fracwave_core::dynamics::{
    convergence_experiment, evolve_with, initial_data, invariance_diagnostic, ConvergenceConfig, Dynamics,
    Equation, EvolutionConfig, InvarianceConfig, InvarianceFlow,
};
use fracwave_core::gibbs::{
    density_gap_mc, log_partition_mc, potential_mean_mc, tail_probability, counterexample_growth, CoeffSource,
    McConfig, Variant,
};
use fracwave_core::renorm::POSITIVITY_CONDITION;
use fracwave_core::sampling::InitialDataConvention;
use fracwave_core::stats::median;
use fracwave_core::variational::{cameron_martin_ratio, default_drift_band, minimize, DriftProfile, MinimizeOptions};
use fracwave_core::{Lattice, PotentialSpec, RenormTable, SeededStream};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{EstimateRow, RunDir};

type Res = Result<(), CliError>;

fn spec(cfg: &RunConfig) -> Result<PotentialSpec, CliError> {
    cfg.potential.spec()
}

/// The potential, refused unless it passes every condition.
fn validated(cfg: &RunConfig) -> Result<PotentialSpec, CliError> {
    Ok(spec(cfg)?.validated_for(cfg.alpha)?)
}

fn table(run: &mut RunDir, s: &PotentialSpec, alpha: f64, n: usize) -> Result<(RenormTable, String), CliError> {
    let t = RenormTable::new(s, alpha, n)?;
    let h = t.hash();
    run.record_table(n, &h);
    Ok((t, h))
}

/// Hash of the table at the largest cutoff, for tables that do not depend
/// on the potential.
fn reference_hash(run: &mut RunDir, cfg: &RunConfig) -> Result<String, CliError> {
    let n = *cfg.n_ladder.iter().max().expect("non-empty ladder");
    Ok(table(run, &spec(cfg)?, cfg.alpha, n)?.1)
}

fn mc(cfg: &RunConfig, seed: u64) -> McConfig {
    McConfig {
        ess_threshold: cfg.mc.ess_min,
        ..McConfig::new(cfg.mc.samples, seed)
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

#[derive(Serialize)]
struct ConstantsRow {
    alpha: f64,
    n: usize,
    sigma_sq: f64,
    sigma_n_sq: f64,
    sigma_tilde_n_sq: f64,
    a_bar_1_n: f64,
    kappa_n: f64,
    b_bar_1: f64,
    lambda_0: f64,
    table_hash: String,
}

pub fn constants(run: &mut RunDir, cfg: &RunConfig, n: Option<usize>) -> Res {
    let s = spec(cfg)?;
    let ladder = n.map(|n| vec![n]).unwrap_or_else(|| cfg.n_ladder.clone());
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    for n in ladder {
        let (t, h) = table(run, &s, cfg.alpha, n)?;
        run.write_json(&format!("renorm_table_n{n}.json"), &t)?;
        rows.push(ConstantsRow {
            alpha: t.alpha,
            n,
            sigma_sq: t.sigma_sq,
            sigma_n_sq: t.sigma_n_sq,
            sigma_tilde_n_sq: t.sigma_tilde_n_sq,
            a_bar_1_n: t.a_bar_n.get(1).copied().unwrap_or(0.0),
            kappa_n: t.kappa_n,
            b_bar_1: t.b_bar_1,
            lambda_0: t.lambda_0,
            table_hash: h,
        });
        tables.push(t);
    }
    run.write_csv("constants.csv", &rows)?;
    let out = if tables.len() == 1 {
        serde_json::to_string_pretty(&tables[0])?
    } else {
        serde_json::to_string_pretty(&tables)?
    };
    println!("{out}");
    Ok(())
}

#[derive(Serialize)]
struct ConditionRow {
    alpha: f64,
    condition: &'static str,
    ok: bool,
    table_hash: String,
}

pub fn validate_potential(run: &mut RunDir, cfg: &RunConfig) -> Res {
    let s = spec(cfg)?;
    let r = s.validate(cfg.alpha);
    let h = reference_hash(run, cfg)?;
    use fracwave_core::renorm::{BIFURCATION_CONDITION, LEADING_CONDITION};
    let rows = [
        (LEADING_CONDITION, r.leading_ok),
        (BIFURCATION_CONDITION, r.bifurcation_ok),
        (POSITIVITY_CONDITION, r.positivity_ok),
    ]
    .map(|(condition, ok)| ConditionRow {
        alpha: cfg.alpha,
        condition,
        ok,
        table_hash: h.clone(),
    });
    run.write_csv("validation.csv", &rows)?;
    run.write_json("validation.json", &r)?;
    run.note("valid", r.is_valid());
    run.note("failures", &r.failures);
    println!("{}", serde_json::to_string_pretty(&r)?);
    if r.is_valid() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("potential rejected: {}", r.failures.join("; "))))
    }
}

#[derive(Serialize)]
struct TailRow {
    alpha: f64,
    n: usize,
    r: f64,
    probability: f64,
    lower: f64,
    upper: f64,
    exceed: usize,
    n_samples: usize,
    seed: u64,
    table_hash: String,
}

pub fn sample_stats(run: &mut RunDir, cfg: &RunConfig, variant: Variant, r: &[f64]) -> Res {
    let s = spec(cfg)?;
    let mut rows = Vec::new();
    let mut tails = Vec::new();
    let mut fits = Vec::new();
    for &seed in &cfg.seeds {
        for &n in &cfg.n_ladder {
            let (t, h) = table(run, &s, cfg.alpha, n)?;
            let m = mc(cfg, seed);
            let e = potential_mean_mc(&t, variant, &m)?;
            rows.push(EstimateRow::new(cfg.alpha, n, 1.0, &e, &h));
            let curve = tail_probability(&t, variant, r, &m)?;
            fits.push(serde_json::json!({
                "n": n,
                "seed": seed,
                "slope": curve.fit.map(|f| f.slope),
                "reference_exponent": curve.reference_exponent,
            }));
            tails.extend(curve.points.iter().map(|p| TailRow {
                alpha: cfg.alpha,
                n,
                r: p.r,
                probability: p.probability,
                lower: p.lower,
                upper: p.upper,
                exceed: p.exceed,
                n_samples: curve.n_samples,
                seed,
                table_hash: h.clone(),
            }));
        }
    }
    run.write_csv("sample_stats.csv", &rows)?;
    run.write_csv("tail.csv", &tails)?;
    run.note("tail_fits", fits);
    Ok(())
}

pub fn gibbs_z(run: &mut RunDir, cfg: &RunConfig, p: f64, band: f64, plain: bool) -> Res {
    let s = validated(cfg)?;
    let mut rows = Vec::new();
    let mut est = Vec::new();
    for &seed in &cfg.seeds {
        for &n in &cfg.n_ladder {
            let (t, h) = table(run, &s, cfg.alpha, n)?;
            let mut m = mc(cfg, seed + n as u64);
            if plain {
                m = m.plain();
            }
            let e = log_partition_mc(&t, Variant::Measure, p, &m)?;
            rows.push(EstimateRow::new(cfg.alpha, n, p, &e, &h));
            est.push(e);
        }
    }
    run.write_csv("gibbs_z.csv", &rows)?;
    // inverse-variance pooled mean; the ladder is bounded when every
    // estimate lies within `band` pooled standard errors of it
    let w: Vec<f64> = est.iter().map(|e| 1.0 / (e.std_error * e.std_error)).collect();
    let wsum: f64 = w.iter().sum();
    let pooled = est.iter().zip(&w).map(|(e, w)| e.mean * w).sum::<f64>() / wsum;
    let pooled_se = (1.0 / wsum).sqrt();
    let bounded = est.iter().all(|e| (e.mean - pooled).abs() <= band * pooled_se);
    let verdict = if bounded { "bounded" } else { "not-bounded" };
    run.note("pooled_mean", pooled);
    run.note("pooled_stderr", pooled_se);
    run.note("band_stderrs", band);
    run.note("verdict", verdict);
    run.note(
        "kurtosis_warnings",
        est.iter().filter(|e| e.kurtosis_warning()).map(|e| e.seed).collect::<Vec<_>>(),
    );
    println!(
        "log Z ladder: {} rows, pooled {pooled:.6} +- {pooled_se:.6}, verdict {verdict}",
        rows.len()
    );
    Ok(())
}

pub fn gibbs_converge(run: &mut RunDir, cfg: &RunConfig, p: f64, reference: Option<usize>, frozen: bool) -> Res {
    let s = validated(cfg)?;
    let reference = reference.unwrap_or_else(|| *cfg.n_ladder.iter().max().expect("non-empty ladder"));
    let source = if frozen { CoeffSource::Limit } else { CoeffSource::Truncated };
    let ladder: Vec<usize> = cfg.n_ladder.iter().copied().filter(|&n| n < reference).collect();
    if ladder.is_empty() {
        return Err(CliError::Validation(format!("no cutoff in the ladder lies below the reference {reference}")));
    }
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for &n in &ladder {
        let (t, h) = table(run, &s, cfg.alpha, n)?;
        let mut means = Vec::new();
        for &seed in &cfg.seeds {
            let e = density_gap_mc(&t, reference, p, source, &mc(cfg, seed))?;
            means.push(e.mean);
            rows.push(EstimateRow::new(cfg.alpha, n, p, &e, &h));
        }
        medians.push(median(&means));
    }
    run.write_csv("gibbs_converge.csv", &rows)?;
    let decreasing = strictly_decreasing(&medians);
    run.note("reference_n", reference);
    run.note("medians", ladder.iter().zip(&medians).collect::<Vec<_>>());
    run.note("decreasing", decreasing);
    println!("density gap medians {medians:?}, decreasing {decreasing}");
    Ok(())
}

#[derive(Serialize)]
struct CounterexampleRow {
    alpha: f64,
    theta: f64,
    n: usize,
    bound: f64,
    drift: f64,
    table_hash: String,
}

pub fn counterexample(run: &mut RunDir, cfg: &RunConfig, theta: f64) -> Res {
    let s = spec(cfg)?;
    let g = counterexample_growth(&s, cfg.alpha, theta, &cfg.n_ladder)?;
    let mut rows = Vec::new();
    for r in &g.rows {
        let (_, h) = table(run, &s, cfg.alpha, r.n)?;
        rows.push(CounterexampleRow {
            alpha: cfg.alpha,
            theta,
            n: r.n,
            bound: r.bound,
            drift: r.drift,
            table_hash: h,
        });
    }
    run.write_csv("counterexample.csv", &rows)?;
    let reference = 4.0 * (1.0 - cfg.alpha);
    run.note("fitted_exponent", g.fit.map(|f| f.slope));
    run.note("reference_exponent", reference);
    match g.fit {
        Some(f) => println!("-bound grows like N^{:.4} (reference {reference:.4})", f.slope),
        None => println!("bound is not negative along the ladder"),
    }
    Ok(())
}

#[derive(Serialize)]
struct VariationalRow {
    alpha: f64,
    n: usize,
    band: usize,
    theta: f64,
    initial_objective: f64,
    objective: f64,
    iterations: usize,
    converged: bool,
    cameron_martin_ratio: f64,
    table_hash: String,
}

#[derive(Serialize)]
struct TraceRow {
    n: usize,
    iteration: usize,
    objective: f64,
    grad_norm: f64,
    step: f64,
}

pub fn variational(run: &mut RunDir, cfg: &RunConfig, band: Option<usize>, theta: f64, max_iterations: usize) -> Res {
    let s = spec(cfg)?;
    let opts = MinimizeOptions {
        max_iterations,
        ..MinimizeOptions::default()
    };
    let mut rows = Vec::new();
    let mut trace = Vec::new();
    for &n in &cfg.n_ladder {
        let (t, h) = table(run, &s, cfg.alpha, n)?;
        let b = band.unwrap_or_else(|| default_drift_band(n));
        let init = DriftProfile::constant(b, theta * (n as f64).powf(t.beta()));
        let f0 = fracwave_core::variational::objective(&init, &t)?;
        let m = minimize(&t, &init, &opts)?;
        let cm = if m.drift.energy() > 0.0 {
            cameron_martin_ratio(&m.drift, &t)
        } else {
            0.0
        };
        trace.extend(m.trace.iter().map(|r| TraceRow {
            n,
            iteration: r.iteration,
            objective: r.objective,
            grad_norm: r.grad_norm,
            step: r.step,
        }));
        rows.push(VariationalRow {
            alpha: cfg.alpha,
            n,
            band: b,
            theta,
            initial_objective: f0,
            objective: m.objective,
            iterations: m.iterations,
            converged: m.converged,
            cameron_martin_ratio: cm,
            table_hash: h,
        });
    }
    run.write_csv("variational.csv", &rows)?;
    run.write_csv("variational_trace.csv", &trace)?;
    Ok(())
}

#[derive(Serialize)]
struct EvolveRow {
    alpha: f64,
    n: usize,
    seed: u64,
    t: f64,
    energy: f64,
    energy_drift: f64,
    l2_norm_sq: f64,
    sobolev_norm: f64,
    table_hash: String,
}

fn sobolev_sigma(cfg: &RunConfig) -> f64 {
    cfg.dynamics.sigma.unwrap_or(cfg.alpha - 1.0 - 0.05)
}

pub fn evolve(run: &mut RunDir, cfg: &RunConfig, n: usize, seed: Option<u64>, equation: Equation) -> Res {
    let s = spec(cfg)?;
    let (t, h) = table(run, &s, cfg.alpha, n)?;
    let seed = seed.unwrap_or(cfg.seeds[0]);
    let d = &cfg.dynamics;
    let evo = EvolutionConfig {
        mass_convention: d.mass_convention,
        ..EvolutionConfig::new(equation, d.dt, d.t_final, d.stride)
    };
    let dynamics = Dynamics::new(&t, &evo)?;
    let lat = Lattice::new(n, 2 * n + 1, cfg.alpha)?;
    let data = initial_data(&lat, SeededStream::new(seed, 0), InitialDataConvention::TwoAlpha);
    let sigma = sobolev_sigma(cfg);
    let mut rows = Vec::new();
    let mut e0 = None;
    let mut failure = None;
    evolve_with(&dynamics, &data, &evo, |time, st| {
        match dynamics.energy(st) {
            Ok(e) => {
                let base = *e0.get_or_insert(e);
                rows.push(EvolveRow {
                    alpha: cfg.alpha,
                    n,
                    seed,
                    t: time,
                    energy: e,
                    energy_drift: (e - base).abs() / base.abs().max(1.0),
                    l2_norm_sq: st.u.l2_norm_sq(),
                    sobolev_norm: st.u.sobolev_norm(sigma),
                    table_hash: h.clone(),
                });
            }
            Err(err) => failure = Some(err),
        }
        false
    })?;
    if let Some(err) = failure {
        return Err(err.into());
    }
    let drift = rows.iter().map(|r| r.energy_drift).fold(0.0, f64::max);
    run.write_csv("evolve.csv", &rows)?;
    run.note("max_energy_drift", drift);
    run.note("sobolev_sigma", sigma);
    println!("{} outputs, max relative energy drift {drift:.3e}", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceRow {
    alpha: f64,
    n: usize,
    seed: u64,
    sobolev_sigma: f64,
    sup_diff: f64,
    sup_remainder: f64,
    sup_solution: f64,
    table_hash: String,
}

pub fn converge_dynamics(run: &mut RunDir, cfg: &RunConfig, frozen: bool) -> Res {
    let s = spec(cfg)?;
    let mut tables = Vec::new();
    let mut hashes = Vec::new();
    for &n in &cfg.n_ladder {
        let (t, h) = table(run, &s, cfg.alpha, n)?;
        tables.push(t);
        hashes.push(h);
    }
    let d = &cfg.dynamics;
    let mut cc = ConvergenceConfig::new(cfg.alpha, d.dt, d.t_final, d.stride);
    cc.sobolev_sigma = sobolev_sigma(cfg);
    if frozen {
        cc.coefficients = CoeffSource::Limit;
    }
    let report = convergence_experiment(&tables, &cfg.seeds, &cc)?;
    let rows: Vec<ConvergenceRow> = report
        .rows
        .iter()
        .map(|r| {
            let i = cfg.n_ladder.iter().position(|&n| n == r.n).expect("row from the ladder");
            ConvergenceRow {
                alpha: cfg.alpha,
                n: r.n,
                seed: r.seed,
                sobolev_sigma: report.sobolev_sigma,
                sup_diff: r.sup_diff,
                sup_remainder: r.sup_remainder,
                sup_solution: r.sup_solution,
                table_hash: hashes[i].clone(),
            }
        })
        .collect();
    run.write_csv("converge_dynamics.csv", &rows)?;
    let med: Vec<f64> = report.medians.iter().map(|m| m.1).collect();
    let decreasing = strictly_decreasing(&med);
    run.note("medians", &report.medians);
    run.note("decreasing", decreasing);
    println!("median sup differences {med:?}, decreasing {decreasing}");
    Ok(())
}

#[derive(Serialize)]
struct InvarianceRow {
    alpha: f64,
    n: usize,
    observable: &'static str,
    t_probe: f64,
    mean_initial: f64,
    mean_final: f64,
    difference: f64,
    stderr: f64,
    z_score: f64,
    n_samples: usize,
    seed: u64,
    ess: f64,
    table_hash: String,
}

pub fn invariance(run: &mut RunDir, cfg: &RunConfig, n: usize, t_probe: f64, flow: InvarianceFlow) -> Res {
    let s = validated(cfg)?;
    let (t, h) = table(run, &s, cfg.alpha, n)?;
    let ic = InvarianceConfig {
        t_probe,
        dt: cfg.dynamics.dt,
        n_samples: cfg.mc.samples,
        seed: cfg.seeds[0],
        flow,
        ess_threshold: cfg.mc.ess_min,
    };
    let rep = invariance_diagnostic(&t, &ic)?;
    let rows: Vec<InvarianceRow> = rep
        .rows
        .iter()
        .map(|r| InvarianceRow {
            alpha: cfg.alpha,
            n,
            observable: r.observable.name(),
            t_probe,
            mean_initial: r.mean_initial,
            mean_final: r.mean_final,
            difference: r.difference,
            stderr: r.std_error,
            z_score: r.z_score,
            n_samples: rep.n_samples,
            seed: ic.seed,
            ess: rep.ess_fraction,
            table_hash: h.clone(),
        })
        .collect();
    run.write_csv("invariance.csv", &rows)?;
    let zmax = rep.rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
    run.note("max_abs_z", zmax);
    run.note("ess_fraction", rep.ess_fraction);
    println!("max |z| {zmax:.3}, ESS fraction {:.3}", rep.ess_fraction);
    Ok(())
}

#[derive(Serialize)]
struct KernelRow {
    alpha: f64,
    j: u32,
    t: f64,
    sup: f64,
    sup_fine: f64,
    mass: f64,
    table_hash: String,
}

#[derive(Serialize)]
struct KernelConstantRow {
    alpha: f64,
    j: u32,
    constant: f64,
    table_hash: String,
}

pub fn dispersive(run: &mut RunDir, cfg: &RunConfig, blocks: &[u32], times: &[f64]) -> Res {
    let h = reference_hash(run, cfg)?;
    let k = kernel_decay(cfg.alpha, blocks, times);
    let rows: Vec<KernelRow> = k
        .samples
        .iter()
        .map(|s| KernelRow {
            alpha: cfg.alpha,
            j: s.j,
            t: s.t,
            sup: s.sup,
            sup_fine: s.sup_fine,
            mass: s.mass,
            table_hash: h.clone(),
        })
        .collect();
    let consts: Vec<KernelConstantRow> = k
        .constants
        .iter()
        .map(|&(j, c)| KernelConstantRow {
            alpha: cfg.alpha,
            j,
            constant: c,
            table_hash: h.clone(),
        })
        .collect();
    run.write_csv("dispersive_kernel.csv", &rows)?;
    run.write_csv("dispersive_constants.csv", &consts)?;
    run.note("spread", k.spread);
    run.note("refinement", k.refinement);
    println!("block constants spread {:.3}", k.spread);
    Ok(())
}

#[derive(Serialize)]
struct ConvolutionRow {
    case: &'static str,
    parameters: String,
    truncation: usize,
    k0: usize,
    sum: f64,
    envelope: f64,
    ratio: f64,
    table_hash: String,
}

#[derive(Serialize)]
struct WickMomentRow {
    alpha: f64,
    power: usize,
    sigma: f64,
    n: usize,
    value: f64,
    table_hash: String,
}

pub fn oracles(run: &mut RunDir, cfg: &RunConfig, truncation: usize, k0: &[usize]) -> Res {
    let h = reference_hash(run, cfg)?;
    let cases = [
        (ConvolutionCase::I { eta1: 1.0, eta2: 1.5 }, "eta1=1,eta2=1.5"),
        (ConvolutionCase::II { eta1: 1.0 }, "eta1=1"),
        (ConvolutionCase::III { eta1: 1.0, eta2: 3.0 }, "eta1=1,eta2=3"),
        (ConvolutionCase::IV { n: 2, eta: 1.6 }, "n=2,eta=1.6"),
        (ConvolutionCase::IV { n: 3, eta: 1.6 }, "n=3,eta=1.6"),
    ];
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for (case, params) in cases {
        let r = convolution_sum_oracle(case, k0, truncation)?;
        for i in 0..r.k0.len() {
            rows.push(ConvolutionRow {
                case: case.name(),
                parameters: params.to_string(),
                truncation,
                k0: r.k0[i],
                sum: r.sums[i],
                envelope: r.envelope[i],
                ratio: r.ratios[i],
                table_hash: h.clone(),
            });
        }
        verdicts.push(serde_json::json!({
            "case": case.name(),
            "parameters": params,
            "max_ratio": r.max_ratio,
            "bounded": r.saturation.bounded,
        }));
    }
    run.write_csv("oracles_convolution.csv", &rows)?;
    let beta = 1.0 - cfg.alpha;
    let mut wick = Vec::new();
    let mut sat = Vec::new();
    for power in 2..=4usize {
        let sigma = power as f64 * beta + 0.1;
        let l = wick_moment_ladder(cfg.alpha, power, sigma, &cfg.n_ladder)?;
        for (n, v) in l.n.iter().zip(&l.values) {
            wick.push(WickMomentRow {
                alpha: cfg.alpha,
                power,
                sigma,
                n: *n,
                value: *v,
                table_hash: h.clone(),
            });
        }
        sat.push(serde_json::json!({
            "power": power,
            "sigma": sigma,
            "contraction": l.saturation.contraction,
            "bounded": l.saturation.bounded,
        }));
    }
    run.write_csv("oracles_wick.csv", &wick)?;
    run.note("convolution", verdicts);
    run.note("wick_moments", sat);
    Ok(())
}

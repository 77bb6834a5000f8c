//! `fracwave`: reproducible experiment runner.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracwave_core::dynamics::{Equation, InvarianceFlow};
use fracwave_core::gibbs::Variant;
use serde_json::Value;

use config::{check_alpha, PotentialConfig, PotentialSource, RunConfig};
use error::CliError;
use output::RunDir;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "FRACWAVE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "fracwave", version, about = "Wick-renormalised fractional wave experiments")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the JSON config.
#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// JSON run config, or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// `preset:NAME` (quartic, sextic, violating) or `coeffs:a0,a1,...`.
    #[arg(long, global = true)]
    potential: Option<String>,
    /// Cutoff ladder, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    ladder: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum VariantArg {
    Full,
    Tilde,
    Chaos,
    Measure,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::Tilde => Variant::Tilde,
            VariantArg::Chaos => Variant::Chaos,
            VariantArg::Measure => Variant::Measure,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum EquationArg {
    Full,
    Cubic,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FlowArg {
    Full,
    Linear,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Renormalisation constants at each cutoff.
    Constants {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Check the criticality and positivity conditions of the potential.
    ValidatePotential,
    /// Mean of the potential integral and its tail probabilities.
    SampleStats {
        #[arg(long, value_enum, default_value = "tilde")]
        variant: VariantArg,
        /// Tail thresholds.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
        r: Vec<f64>,
    },
    /// `log Z_N^{(p)}` along the ladder with a bounded-band verdict.
    GibbsZ {
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Half-width of the band in pooled standard errors.
        #[arg(long, default_value_t = 5.0)]
        band: f64,
        /// Sample the zero mode instead of integrating it out.
        #[arg(long)]
        plain: bool,
    },
    /// Density gaps against a reference cutoff.
    GibbsConverge {
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Reference cutoff; defaults to the top of the ladder.
        #[arg(long)]
        reference: Option<usize>,
        /// Use the limiting coefficients in the truncated density.
        #[arg(long)]
        frozen: bool,
    },
    /// Variational bound at the constant counterexample drift.
    Counterexample {
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Minimise the variational objective over band-limited drifts.
    Variational {
        #[arg(long)]
        band: Option<usize>,
        /// Starting drift `θ N^{1-α}`.
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
    },
    /// One trajectory of the truncated equation with its energy.
    Evolve {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "full")]
        equation: EquationArg,
    },
    /// Distance between the truncated and limiting flows.
    ConvergeDynamics {
        /// Use the limiting coefficients in the truncated flow.
        #[arg(long)]
        frozen: bool,
    },
    /// Moments of observables before and after the flow.
    Invariance {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        t_probe: f64,
        #[arg(long, value_enum, default_value = "full")]
        flow: FlowArg,
    },
    /// Decay of the frequency-localised kernels.
    Dispersive {
        #[arg(long, value_delimiter = ',', default_value = "3,4,5,6")]
        blocks: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8,1,1.2,1.4,1.6,1.8,2")]
        times: Vec<f64>,
    },
    /// Brute-force convolution sums and Wick moment ladders.
    Oracles {
        #[arg(long, default_value_t = 64)]
        truncation: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,4,8,16")]
        k0: Vec<usize>,
    },
    /// Repeat the run recorded in a manifest.
    Rerun { manifest: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Constants { .. } => "constants",
            Command::ValidatePotential => "validate-potential",
            Command::SampleStats { .. } => "sample-stats",
            Command::GibbsZ { .. } => "gibbs-z",
            Command::GibbsConverge { .. } => "gibbs-converge",
            Command::Counterexample { .. } => "counterexample",
            Command::Variational { .. } => "variational",
            Command::Evolve { .. } => "evolve",
            Command::ConvergeDynamics { .. } => "converge-dynamics",
            Command::Invariance { .. } => "invariance",
            Command::Dispersive { .. } => "dispersive",
            Command::Oracles { .. } => "oracles",
            Command::Rerun { .. } => "rerun",
        }
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn is_manifest(v: &Value) -> bool {
    v.get("schema_version").is_some() && v.get("config").is_some()
}

fn resolve(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let v = read_json(path)?;
            RunConfig::from_json(if is_manifest(&v) { &v["config"] } else { &v })?
        }
        None => RunConfig::default(),
    };
    if let Some(a) = common.alpha {
        check_alpha(a, "/alpha")?;
        cfg.alpha = a;
        // presets are tuned per alpha
        if let PotentialSource::Preset(name) = &cfg.potential.source {
            cfg.potential = PotentialConfig::parse_flag(name, a)?;
        }
    }
    if let Some(p) = &common.potential {
        cfg.potential = PotentialConfig::parse_flag(p, cfg.alpha)?;
    }
    if let Some(l) = &common.ladder {
        if l.is_empty() || l.contains(&0) {
            return Err(CliError::Config {
                pointer: "/n_ladder".into(),
                message: "cutoffs must be positive".into(),
            });
        }
        cfg.n_ladder = l.clone();
    }
    if let Some(s) = &common.seeds {
        if s.is_empty() {
            return Err(CliError::Config {
                pointer: "/seeds".into(),
                message: "needs at least one seed".into(),
            });
        }
        cfg.seeds = s.clone();
    }
    if let Some(n) = common.samples {
        if n == 0 {
            return Err(CliError::Config {
                pointer: "/mc/samples".into(),
                message: "expected a positive integer".into(),
            });
        }
        cfg.mc.samples = n;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn init_threads() -> Result<usize, CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Threads(format!("{THREADS_ENV}={v} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Threads(e.to_string()))?;
    }
    Ok(rayon::current_num_threads())
}

fn dispatch(command: &Command, run: &mut RunDir, cfg: &RunConfig) -> Result<(), CliError> {
    match command.clone() {
        Command::Constants { n } => commands::constants(run, cfg, n),
        Command::ValidatePotential => commands::validate_potential(run, cfg),
        Command::SampleStats { variant, r } => commands::sample_stats(run, cfg, variant.into(), &r),
        Command::GibbsZ { p, band, plain } => commands::gibbs_z(run, cfg, p, band, plain),
        Command::GibbsConverge { p, reference, frozen } => commands::gibbs_converge(run, cfg, p, reference, frozen),
        Command::Counterexample { theta } => commands::counterexample(run, cfg, theta),
        Command::Variational {
            band,
            theta,
            max_iterations,
        } => commands::variational(run, cfg, band, theta, max_iterations),
        Command::Evolve { n, seed, equation } => {
            let eq = match equation {
                EquationArg::Full => Equation::FullPotential,
                EquationArg::Cubic => Equation::CubicLimit,
            };
            commands::evolve(run, cfg, n, seed, eq)
        }
        Command::ConvergeDynamics { frozen } => commands::converge_dynamics(run, cfg, frozen),
        Command::Invariance { n, t_probe, flow } => {
            let f = match flow {
                FlowArg::Full => InvarianceFlow::Full,
                FlowArg::Linear => InvarianceFlow::Linear,
            };
            commands::invariance(run, cfg, n, t_probe, f)
        }
        Command::Dispersive { blocks, times } => commands::dispersive(run, cfg, &blocks, &times),
        Command::Oracles { truncation, k0 } => commands::oracles(run, cfg, truncation, &k0),
        Command::Rerun { .. } => unreachable!("rerun is unwrapped before dispatch"),
    }
}

/// Runs one command and writes its manifest, also on failure.
fn execute(argv: Vec<String>, command: Command, cfg: RunConfig, threads: usize) -> Result<(), CliError> {
    let mut run = RunDir::create(command.name(), &cfg.output_dir)?;
    let result = dispatch(&command, &mut run, &cfg);
    let manifest = run.finish(&argv, &cfg, threads, result.as_ref().map(|_| ()))?;
    eprintln!("manifest: {}", manifest.display());
    result
}

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let cli = Cli::parse_from(&argv);
    let threads = init_threads()?;
    match cli.command {
        Command::Rerun { manifest } => {
            let m = read_json(&manifest)?;
            if !is_manifest(&m) {
                return Err(CliError::Config {
                    pointer: "/".into(),
                    message: format!("{} is not a run manifest", manifest.display()),
                });
            }
            let old: Vec<String> = serde_json::from_value(m["argv"].clone()).map_err(|_| CliError::Config {
                pointer: "/argv".into(),
                message: "expected an array of strings".into(),
            })?;
            let inner = Cli::try_parse_from(&old).map_err(|e| CliError::Config {
                pointer: "/argv".into(),
                message: e.to_string(),
            })?;
            let mut cfg = RunConfig::from_json(&m["config"])?;
            if let Some(o) = &cli.common.out {
                cfg.output_dir = o.clone();
            }
            execute(old, inner.command, cfg, threads)
        }
        command => {
            let cfg = resolve(&cli.common)?;
            execute(argv, command, cfg, threads)
        }
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid of {grid_m} points cannot hold band {band} (need at least {required})")]
    GridTooSmall {
        grid_m: usize,
        band: usize,
        required: usize,
    },
    #[error("alpha = {0} is outside (1/2, 1)")]
    AlphaOutOfRange(f64),
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("negative power of |k| applied to a field with non-zero mean")]
    NegativePowerAtZeroMode,
    #[error("fields live on different lattices")]
    LatticeMismatch,
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("positivity condition fails: {0}")]
    NotPositive(String),
    #[error("positivity holds at theta = {theta}: the drift gives no growth")]
    PositivityHolds { theta: f64 },
    #[error("quadrature moved by {delta:e} when the order was doubled (tolerance {tol:e})")]
    QuadratureNotConverged { delta: f64, tol: f64 },
    #[error("effective sample size {ess:.1} is below {threshold:.1}")]
    DegenerateWeights { ess: f64, threshold: f64 },
    #[error("non-finite coefficient at t = {t}")]
    NonFinite { t: f64 },
    #[error("exponents violate the hypothesis of case {case}: {reason}")]
    ConditionViolated { case: &'static str, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Exit code for a failed potential check or schema violation.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for weights too degenerate to trust.
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] fracwave_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Threads(String),
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use fracwave_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Core(E::DegenerateWeights { .. }) => EXIT_DEGENERATE,
            CliError::Core(
                E::InvalidPotential(_)
                | E::NotPositive(_)
                | E::PositivityHolds { .. }
                | E::ConditionViolated { .. }
                | E::AlphaOutOfRange(_)
                | E::ZeroCutoff
                | E::Config(_),
            ) => EXIT_VALIDATION,
            _ => 1,
        }
    }
}

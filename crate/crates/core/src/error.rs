use thiserror::Error;

/// Every failure the engine can report. Each variant carries a stable
/// upper-case code (see [`Error::code`]) used by the CLI and in JSON output.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("m must be at least 1 (got {0})")]
    MOutOfRange(u32),

    #[error("coherent clusters require m >= 2 (got m = {0})")]
    CoherentRequiresMGe2(u32),

    #[error("phonon cap for {mode} is {cap}, must be between 1 and {max}")]
    CapOutOfRange {
        mode: &'static str,
        cap: u32,
        max: u32,
    },

    #[error("mu_{mode} = {value} is outside [0, 1)")]
    MuOutOfRange { mode: &'static str, value: f64 },

    #[error("{name} = {value} must be non-negative")]
    NegativeValue { name: &'static str, value: f64 },

    #[error("{name} = {value} must be strictly positive")]
    NonPositiveValue { name: &'static str, value: f64 },

    #[error("{name} is not a finite number")]
    NonFinite { name: &'static str },

    #[error("jump operator {operator} maps block {block} into blocks {first} and {second}")]
    RoutingAmbiguous {
        operator: usize,
        block: usize,
        first: usize,
        second: usize,
    },

    #[error("channel {channel} routes population of state {state} outside the enumerated space; use pump closure")]
    BlockRoutingMiss { channel: usize, state: usize },

    #[error("density matrix lost positivity at t = {time}: min eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { time: f64, min_eigenvalue: f64 },

    #[error("steady state not reached by t = {time}: last probe distance {distance:e}")]
    NotConverged {
        time: f64,
        distance: f64,
        distribution: Vec<f64>,
    },

    #[error("dark-state enumeration needs a coherent cluster with 2 <= m <= 6 (got m = {0})")]
    DarkRange(u32),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::MOutOfRange(_) => "M_OUT_OF_RANGE",
            Error::CoherentRequiresMGe2(_) => "COHERENT_REQUIRES_M_GE_2",
            Error::CapOutOfRange { .. } => "CAP_OUT_OF_RANGE",
            Error::MuOutOfRange { .. } => "MU_OUT_OF_RANGE",
            Error::NegativeValue { .. } => "NEGATIVE_VALUE",
            Error::NonPositiveValue { .. } => "NON_POSITIVE_VALUE",
            Error::NonFinite { .. } => "NON_FINITE",
            Error::RoutingAmbiguous { .. } => "ROUTING_AMBIGUOUS",
            Error::BlockRoutingMiss { .. } => "BLOCK_ROUTING_MISS",
            Error::PositivityViolation { .. } => "POSITIVITY_VIOLATION",
            Error::NotConverged { .. } => "NOT_CONVERGED",
            Error::DarkRange(_) => "DARK_RANGE",
            Error::Config(_) => "CONFIG",
            Error::Io(_) => "IO",
        }
    }

    /// True for errors caused by bad input rather than by a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MOutOfRange(_)
                | Error::CoherentRequiresMGe2(_)
                | Error::CapOutOfRange { .. }
                | Error::MuOutOfRange { .. }
                | Error::NegativeValue { .. }
                | Error::NonPositiveValue { .. }
                | Error::NonFinite { .. }
                | Error::DarkRange(_)
                | Error::Config(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

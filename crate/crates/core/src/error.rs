use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its physical or numerical domain.
    #[error("domain error on `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error(
        "time step {dt} too coarse for the fastest scale in the problem; use dt <= {suggested}"
    )]
    StepTooLarge { dt: f64, suggested: f64 },

    #[error("retarded time {retarded} lies outside the simulated horizon [0, {horizon}]")]
    OutOfHorizon { retarded: f64, horizon: f64 },

    #[error("time {t} is not a grid point (dt = {dt})")]
    OffGrid { t: f64, dt: f64 },

    #[error("time grids do not match")]
    GridMismatch,

    #[error("generator has no valid support")]
    NoValidSupport,

    #[error("masked generator segment at index {index} needs an exact seed")]
    MissingSeed { index: usize },

    #[error("formula not applicable: {0}")]
    NotApplicable(String),

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("packet table {path}: {message}")]
    PacketTable { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches scenario context.
    pub fn in_scenario(self, scenario: impl Into<String>) -> Self {
        Error::Scenario {
            scenario: scenario.into(),
            source: Box::new(self),
        }
    }

    /// Process exit status for the CLI: 1 usage/config, 2 validation, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Scenario { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate configuration: particles {i} and {j} coincide")]
    DegenerateConfiguration { i: usize, j: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("quantity undefined at t = {t} (requires t > 0)")]
    UndefinedAtTime { t: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("t = {t} lies outside the diagnostic window t >= 1")]
    NotInDiagnosticWindow { t: f64 },

    #[error("numerical blow-up at t = {t}: non-finite state")]
    NumericalBlowup { t: f64 },

    #[error("step size {h:e} fell below the minimum step at t = {t}")]
    StepUnderflow { t: f64, h: f64 },

    #[error("sample times must be strictly increasing")]
    NonMonotoneTimes,

    #[error("insufficient horizon: {0}")]
    InsufficientHorizon(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible scenario: rejection sampling gave up after {attempts} attempts")]
    InfeasibleSpec { attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

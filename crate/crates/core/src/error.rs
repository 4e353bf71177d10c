use std::path::PathBuf;

use thiserror::Error;

use crate::household::{Decision, Outcome};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ecological state: {field} = {value}")]
    InvalidState { field: &'static str, value: f64 },

    #[error("integration diverged: {field} became {value} at step {step}")]
    IntegrationDiverged {
        field: &'static str,
        step: usize,
        value: f64,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("decision violates the {constraint} constraint (relative gap {gap:.3e})")]
    InfeasibleDecision { constraint: &'static str, gap: f64 },

    #[error("household solver failed to converge (best KKT residual {residual:.3e})")]
    SolverFailed {
        best: Box<(Decision, Outcome)>,
        residual: f64,
    },

    #[error("year {year}: {source}")]
    Period {
        year: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("replicate {index} (seed {seed:#018x}): {source}")]
    Replicate {
        index: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("percentile of an empty sample")]
    EmptySample,

    #[error("outcome `{requested}` not present; available: {}", available.join(", "))]
    UnknownOutcome {
        requested: String,
        available: Vec<String>,
    },

    #[error("malformed summary CSV at line {line}: {message}")]
    SummaryFormat { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_year(self, year: u32) -> Self {
        Error::Period {
            year,
            source: Box::new(self),
        }
    }

    /// Strips `Period`/`Replicate` context and returns the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::Period { source, .. } | Error::Replicate { source, .. } => source.root(),
            other => other,
        }
    }
}

use thiserror::Error;

use crate::ingest::IngestError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no root in bracket [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },
    #[error("no convergence after {iterations} iterations; best bracket [{lo}, {hi}]")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },
    #[error("h = {h} is off the U_gamma curve (raw psi = {psi_raw})")]
    OffCurve { h: f64, psi_raw: f64 },
    #[error("gamma not attainable: gamma = {gamma}, minimum BF_0:S = {min_bf}")]
    GammaNotAttainable { gamma: f64, min_bf: f64 },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors that come from a solver failing to converge.
    pub fn is_nonconvergence(&self) -> bool {
        matches!(self, Error::NoConvergence { .. })
    }
}

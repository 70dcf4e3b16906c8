use thiserror::Error;

use crate::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("steady state did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("resonator {index} is a lossless driven cavity on resonance; no steady state exists")]
    DegenerateCavity { index: usize },

    #[error("steady state residual {residual:e} exceeds tolerance {tol:e}")]
    NotConverged { residual: f64, tol: f64 },

    #[error("linear response system is singular at eta = {eta} Hz")]
    SingularSystem { eta: f64 },

    #[error("baseline {quantity} is {value:e}, too small to normalize by")]
    ZeroBaseline { quantity: &'static str, value: f64 },

    #[error("phase step of {step:.3} rad between grid points {index} and {next} is too large to unwrap reliably", next = index + 1)]
    PhaseUnresolved { index: usize, step: f64 },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("at grid point {index}: {source}")]
    AtGridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// The error with any grid-point wrapping removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtGridPoint { source, .. } => source.root(),
            other => other,
        }
    }
}

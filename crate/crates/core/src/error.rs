use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the model, the solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the curve or operation.
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The gap function never became positive while expanding the upper
    /// bracket. Only reachable with custom curves that break the gain or
    /// congestion assumptions.
    #[error("equilibrium bracket failure: gap({phi_hi:e}) = {gap:e} after {doublings} doublings")]
    Bracket {
        phi_hi: f64,
        gap: f64,
        doublings: usize,
    },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    /// One-sided optimum is not positive, so a growth rate is undefined.
    #[error("degenerate one-sided baseline: {what} = {value}")]
    DegenerateBaseline { what: &'static str, value: f64 },

    #[error(
        "degenerate elasticity trace: congestion varied by {spread:e} across the capacity stencil"
    )]
    DegenerateTrace { spread: f64 },

    /// `origin` is the config path or `--set`; `line` counts from 1
    /// within it.
    #[error("{origin}:{line}: {message}")]
    Config {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    pub(crate) fn config(origin: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            origin: origin.to_string(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by user configuration rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::InvalidModel(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

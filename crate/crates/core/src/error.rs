use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A profile coordinate lies outside its action box.
    #[error("{coordinate} = {value} is outside its action box [{lower}, {upper}]")]
    Domain {
        coordinate: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid configuration at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("scalar solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    /// A best-response solve failed while generating training sample `sample`.
    #[error("sample {sample}: {source}")]
    Sampling {
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at `{path}`: {reason}")]
    Parse { path: String, reason: String },

    #[error("training of model `{model}` produced a non-finite loss at epoch {epoch}")]
    Training { model: String, epoch: usize },

    #[error("iterate diverged at iteration {iteration}: leader {leader} reached {value}")]
    Divergence {
        iteration: usize,
        leader: usize,
        value: f64,
    },

    #[error("invalid input: {0}")]
    Input(String),

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
    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (solver, training, divergence) as
    /// opposed to bad input or configuration.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Solver { .. } | Error::Training { .. } | Error::Divergence { .. } => true,
            Error::Sampling { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a cost or payoff function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    /// No on/off schedule keeps the tank inside its temperature band.
    #[error("no feasible schedule: temperature band cannot be held at slot {slot}")]
    Infeasible { slot: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A type has zero total probability mass, so its conditional beliefs are undefined.
    #[error("type {player}{index} has zero probability mass")]
    StarvedType { player: char, index: usize },

    #[error("singular clearing system: {0}")]
    Singular(String),

    #[error("curtailment ratio undefined: baseline schedule has no on-slots")]
    NoBaseline,

    #[error("invalid profile {path}: {reason}")]
    Profile { path: String, reason: String },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("cannot parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit status: 1 for input validation failures, 2 for failures
    /// raised while computing (infeasible schedules, singular systems, domain
    /// violations inside the pipeline).
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config { .. }
            | Error::Parse { .. }
            | Error::Profile { .. }
            | Error::Io { .. }
            | Error::Dimension(_) => 1,
            Error::Domain(_)
            | Error::Calibration(_)
            | Error::Infeasible { .. }
            | Error::StarvedType { .. }
            | Error::Singular(_)
            | Error::NoBaseline => 2,
            Error::Context { .. } => unreachable!("root() never returns a context wrapper"),
        }
    }
}

use thiserror::Error;

/// Errors raised by the solvers, evaluators and the scenario harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("value {value} outside the domain of {what}")]
    Domain { what: String, value: f64 },

    #[error("invalid boundary condition: {0}")]
    BoundaryCondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("infeasible particle state: {0}")]
    Infeasible(String),

    #[error("{kind} error at line {line}: {message}")]
    Parse {
        kind: &'static str,
        line: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),

    /// Failure inside a named scenario run.
    #[error("scenario {id}: {source}")]
    Scenario { id: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Tags the error with the scenario that raised it.
    pub fn in_scenario(self, id: &str) -> Self {
        match self {
            Error::Scenario { .. } => self,
            e => Error::Scenario {
                id: id.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// The underlying error with any scenario tag removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } => source.root(),
            e => e,
        }
    }

    pub(crate) fn domain(what: impl Into<String>, value: f64) -> Self {
        Error::Domain {
            what: what.into(),
            value,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A table, word list or graph would exceed the desk-scale size caps.
    #[error("capacity exceeded: {what} needs {requested} entries, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    /// An iterative solver ran out of iterations.
    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:e}){}", at_t.map(|t| format!(" at t = {t}")).unwrap_or_default())]
    Iteration {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        at_t: Option<f64>,
    },

    /// Caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Attach the annealing parameter to an iteration failure.
    pub fn at_t(self, t: f64) -> Self {
        match self {
            Error::Iteration {
                solver,
                iterations,
                residual,
                ..
            } => Error::Iteration {
                solver,
                iterations,
                residual,
                at_t: Some(t),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

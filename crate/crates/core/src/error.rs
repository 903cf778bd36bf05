use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a documented invariant.
    #[error("{what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// Iterative solver stopped without reaching its tolerance.
    #[error("{solver} did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    /// A runtime numerical contract was breached (energy guard, CFL, drift).
    #[error("numerical contract violated: {0}")]
    Contract(String),

    #[error("config error at {file}:{line}: key `{key}`: {reason}")]
    Config {
        file: String,
        line: usize,
        key: String,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}

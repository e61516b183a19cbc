use thiserror::Error;

/// Errors raised by the solvers, oracles and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes or index ranges that do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Invalid parameter or problem data.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A value left the domain of a closed-form formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A gradient or prox step produced a NaN or infinity.
    #[error("non-finite value in block {block}: {what}")]
    NonFiniteBlock { block: usize, what: String },

    /// The objective stopped being finite during a run.
    #[error("numerical blow-up at iteration {iteration}: {what}")]
    Blowup { iteration: usize, what: String },

    /// A per-step invariant check failed inside a solver.
    #[error("verification failed at iteration {iteration}: {what}")]
    Verification { iteration: usize, what: String },

    /// An iterative reference solve hit its cap.
    #[error("no convergence after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("{0}")]
    Io(String),
}

impl Error {
    /// True for the numeric-failure family (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteBlock { .. }
                | Error::Blowup { .. }
                | Error::Verification { .. }
                | Error::NoConvergence { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

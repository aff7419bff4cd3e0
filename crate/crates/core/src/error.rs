use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameter: {0}")]
    InvalidConfig(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("pole {index} did not converge (last iterate {last}, |g| = {residual:e})")]
    PoleNotConverged {
        index: usize,
        last: Complex64,
        residual: f64,
    },

    #[error("poles {first} and {second} converged to the same root {q}")]
    DuplicatePole {
        first: usize,
        second: usize,
        q: Complex64,
    },

    #[error("pole {index} at {q} is degenerate with the removable point n*pi")]
    DegeneratePole { index: usize, q: Complex64 },

    /// Carries the best available estimate so callers can decide whether to
    /// use it anyway.
    #[error("quadrature budget of {panels} panels exhausted (err_est {err_est:e})")]
    BudgetExceeded {
        panels: usize,
        err_est: f64,
        best: Vec<Complex64>,
    },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("pole cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical method on valid input, as opposed to
    /// invalid arguments, bad cache files and I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PoleNotConverged { .. }
                | Error::DuplicatePole { .. }
                | Error::DegeneratePole { .. }
                | Error::BudgetExceeded { .. }
                | Error::NoConvergence(_)
        )
    }
}

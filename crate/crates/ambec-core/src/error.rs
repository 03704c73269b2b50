use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors for grid construction, catalog evaluation, solving and propagation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("array length {got} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("parameter out of domain for family {family}: {reason}")]
    Domain { family: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite field value at t = {t}, index {index}")]
    NonFinite { t: f64, index: usize },

    #[error("solver did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
    },

    #[error("imaginary-time flow collapsed to the zero field (no bound state at these couplings)")]
    Collapse,

    #[error("phase unwrap ambiguity: |Δθ| = {jump:.3} rad between samples; reduce observer stride or dt")]
    PhaseUnwrap { jump: f64 },

    #[error("tail is not monotone over the fit window")]
    NonMonotoneTail,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(family: impl std::fmt::Display, reason: impl Into<String>) -> Self {
        Error::Domain {
            family: family.to_string(),
            reason: reason.into(),
        }
    }
}

//! Error type shared across the toolkit.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A state or input vector contained a NaN or infinity.
    #[error("non-finite {what} component `{label}`")]
    NonFinite { what: &'static str, label: String },

    /// A selected measurement cannot be evaluated at the given state.
    #[error("measurement `{name}` undefined: {reason}")]
    UndefinedMeasurement { name: String, reason: String },

    #[error("{context}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Central differencing would push a magnitude state below zero.
    #[error(
        "perturbing magnitude state `{label}` by epsilon={eps} makes it negative; \
         use a smaller epsilon or enable the one-sided fallback"
    )]
    MagnitudePerturbation { label: String, eps: f64 },

    #[error(
        "tracking solve did not converge at step {step} within {iters} iterations \
         (best cost {best_cost:.6e})"
    )]
    MpcNoConvergence {
        step: usize,
        iters: usize,
        best_cost: f64,
    },

    #[error("matrix factorization failed: {context}")]
    Factorization { context: String },

    #[error("singular jacobian ({context}): condition number {cond:.3e}")]
    SingularJacobian { cond: f64, context: String },

    /// A perturbed simulation failed while building the observability matrix.
    #[error("perturbation of state `{state}` ({sign}) failed at step {step}: {source}")]
    PerturbedRun {
        state: String,
        sign: char,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("window {index}: {source}")]
    Window {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sigma point {index}: {source}")]
    SigmaPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("training diverged at epoch {epoch} (loss {loss:.6e}, learning rate {lr:.3e})")]
    TrainingDiverged { epoch: usize, loss: f64, lr: f64 },

    #[error("csv row {row}: {reason}")]
    CsvRow { row: usize, reason: String },

    #[error("csv: {0}")]
    CsvFormat(String),

    #[error("net file: {0}")]
    NetFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Tag an error with the sliding-window index it occurred in.
    pub fn in_window(self, index: usize) -> Error {
        Error::Window {
            index,
            source: Box::new(self),
        }
    }

    /// Tag an error with the sigma-point index it occurred at.
    pub fn at_sigma_point(self, index: usize) -> Error {
        Error::SigmaPoint {
            index,
            source: Box::new(self),
        }
    }
}

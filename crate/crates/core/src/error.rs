use thiserror::Error;

/// Errors produced by the penalty, proximal, solver and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Penalty or experiment parameters violate their invariants.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A caller-side precondition (ordering, shape, sign) was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Non-finite values appeared in an input or during iteration.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The SVD backend failed to converge.
    #[error("decomposition failed: {0}")]
    Decomposition(String),

    /// Solver configuration is inconsistent with the problem (e.g. mu <= L).
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite objective was hit mid-solve; the partial trace is kept.
    #[error("numeric error after {} iterations: {message}", trace.iterations)]
    Diverged {
        message: String,
        trace: Box<crate::solver::SolverTrace>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_mismatch(what: &str, expected: (usize, usize), got: (usize, usize)) -> Error {
    Error::Contract(format!(
        "{what}: expected shape {}x{}, got {}x{}",
        expected.0, expected.1, got.0, got.1
    ))
}

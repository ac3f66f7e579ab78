use alloc::string::String;

/// Errors reported by the solvers, the oracle and the grid layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("the functional is not differentiable at x = 0")]
    ZeroVector,

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("gamma = {gamma} must exceed {bound} (= max(0, -lower bound on the smallest eigenvalue))")]
    InvalidGamma { gamma: f64, bound: f64 },

    #[error("stepsize {alpha} is not below the convergence bound {bound}")]
    StepsizeTooLarge { alpha: f64, bound: f64 },

    #[error("linear system is singular (pivot {pivot:e} at column {column})")]
    SingularSystem { column: usize, pivot: f64 },

    #[error("eigenvector estimate has residual {residual:e}, above {limit:e}; {hint}")]
    ResidualTooLarge {
        residual: f64,
        limit: f64,
        hint: &'static str,
    },

    #[error("computed columns are rank deficient")]
    RankDeficient,

    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("inner solver did not converge: {0}")]
    InnerSolver(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(message: &str) -> Self {
        Error::InvalidInput(message.into())
    }
}

//! Error type shared by all modules.

/// Errors produced by validation, solvers, and the analytic layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    /// Row sum deviates from 1 by more than the construction tolerance.
    #[error("row {row} sum deviates from 1 by {deviation}")]
    RowSumDeviation { row: usize, deviation: f64 },

    #[error("vector length {got} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not strongly connected")]
    NotStronglyConnected,

    #[error("matrix is not primitive")]
    NotPrimitive,

    #[error("stationary solver diverged")]
    SolverDivergence,

    #[error("singular linear system")]
    SingularSystem,

    /// `I - DY` is singular in the stationary-distribution update.
    #[error("singular perturbation: I - DY is not invertible")]
    SingularPerturbation,

    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("domain error: {0}")]
    DomainError(String),

    /// A sampled row would be empty. Cannot occur with the self-loop guard;
    /// retained as an assertion.
    #[error("degenerate sample: row {0} has no out-links")]
    DegenerateSample(usize),

    /// Signed gap is zero within tolerance, so the derivative of the
    /// absolute gap is undefined.
    #[error("signed gap is zero within {0}; |gap| is not differentiable here")]
    NonDifferentiable(f64),

    #[error("dominance violated: {0}")]
    DominanceViolated(String),

    #[error("bracket failure: {0}")]
    BracketFailure(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable name, used by the CLI for exit reporting.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "NotSquare",
            Error::NonFiniteEntry { .. } => "NonFiniteEntry",
            Error::NegativeEntry { .. } => "NegativeEntry",
            Error::RowSumDeviation { .. } => "RowSumDeviation",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotStronglyConnected => "NotStronglyConnected",
            Error::NotPrimitive => "NotPrimitive",
            Error::SolverDivergence => "SolverDivergence",
            Error::SingularSystem => "SingularSystem",
            Error::SingularPerturbation => "SingularPerturbation",
            Error::InvalidPerturbation(_) => "InvalidPerturbation",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::HypothesisViolation(_) => "HypothesisViolation",
            Error::DomainError(_) => "DomainError",
            Error::DegenerateSample(_) => "DegenerateSample",
            Error::NonDifferentiable(_) => "NonDifferentiable",
            Error::DominanceViolated(_) => "DominanceViolated",
            Error::BracketFailure(_) => "BracketFailure",
        }
    }
}

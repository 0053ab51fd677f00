use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong inside the library.
///
/// The variants are grouped by [`Error::category`] so that front ends can map
/// them onto process exit codes without matching every case.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("prime mismatch: p = {0} vs p = {1}")]
    PrimeMismatch(u64, u64),
    #[error("modulus {q} is not coprime to p = {p}")]
    NotCoprime { p: u64, q: u64 },
    #[error("invalid group element: {0}")]
    InvalidElement(String),
    #[error("gauge `{gauge}` cannot be evaluated on {what}")]
    IncompatibleGauge { gauge: String, what: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("estimated output of {estimate} elements exceeds the budget of {budget}")]
    BudgetExceeded { estimate: u64, budget: u64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("scale mismatch: {0}")]
    ScaleMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("binary form {0} is not definite")]
    IndefiniteForm(String),
    #[error("weight polytope is unbounded")]
    UnboundedPolytope,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Coarse classification of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad parameters or unsupported combinations.
    Input,
    /// The requested enumeration is larger than the configured budget.
    Budget,
    /// Quadrature, fitting or other numerical failure.
    Numerical,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::BudgetExceeded { .. } => ErrorCategory::Budget,
            Error::Quadrature(_) | Error::DegenerateFit(_) => ErrorCategory::Numerical,
            _ => ErrorCategory::Input,
        }
    }
}

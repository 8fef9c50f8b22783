use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("quadrature did not converge: estimate {estimate:.6e} with error {error:.3e} > tolerance {tol:.3e} after {evaluations} evaluations")]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        tol: f64,
        evaluations: usize,
    },

    #[error("grid is empty (spacing {spacing} too coarse for the domain)")]
    EmptyGrid { spacing: f64 },

    #[error("operator dimension {n} exceeds the dense cap {cap}")]
    OverDenseCap { n: usize, cap: usize },

    #[error("polynomial degree {degree} gives uniform error {bound:.3e} > tolerance {tol:.3e}; degree {required} required")]
    DegreeInsufficient {
        degree: usize,
        required: usize,
        bound: f64,
        tol: f64,
    },

    #[error("potential is not radially homogeneous: {0}")]
    NonHomogeneous(String),

    #[error("curve is not nondecreasing at index {index}")]
    NonMonotone { index: usize },

    #[error("grids are not in bijection: {0}")]
    NoBijection(String),
}

impl Error {
    /// Coarse classification used by front ends to pick exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DimensionMismatch { .. } | Error::InvalidParameter(_) => ErrorKind::Invalid,
            Error::QuadratureNonConvergence { .. }
            | Error::EmptyGrid { .. }
            | Error::OverDenseCap { .. }
            | Error::DegreeInsufficient { .. }
            | Error::NonMonotone { .. }
            | Error::NoBijection(_) => ErrorKind::Numerical,
            Error::UnsupportedDomain(_) | Error::NonHomogeneous(_) => ErrorKind::Precondition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Invalid,
    Numerical,
    Precondition,
}

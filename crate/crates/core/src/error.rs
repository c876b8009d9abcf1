use thiserror::Error;

/// Errors raised by the spectral assimilation toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid coefficient sequence: {0}")]
    InvalidCoefficients(String),

    /// The difference of two coefficient sequences leaves the representable
    /// universe (two power tails with different exponents).
    #[error("tail mismatch: {0}")]
    TailMismatch(String),

    #[error("3DVAR problem is infeasible: {0}")]
    InfeasibleProblem(String),

    #[error("prior covariance is not trace class: {0}")]
    PriorNotTraceClass(String),

    /// Bad data only exists when the noise spectrum accumulates at zero.
    #[error("noise covariance has positive lower bound {0}; every data vector is admissible")]
    LowerBoundPositive(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A series fell outside the decidable term universe.
    #[error("unsupported series: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate spectrum: eigenvalues {first} and {second} closer than {sep_min:e}")]
    DegenerateSpectrum {
        first: String,
        second: String,
        sep_min: f64,
    },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("spectra overlap: {0}")]
    SpectraOverlap(String),
    #[error("solution of a2*L - L*a1 = 1 is singular")]
    SingularLambda,
    #[error("partition does not match the root set: {0}")]
    PartitionMismatch(String),
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
    #[error("outside the domain of the map: {0}")]
    OutsideDomain(String),
    #[error("constraint nullspace has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("found {found} zeros of det f, expected {expected}")]
    ZeroCountMismatch { expected: usize, found: usize },
    #[error("near-double zero of det f at {0}")]
    DegenerateZeros(String),
    #[error("interpolation nullspace has dimension {0}, expected 1")]
    NonUniqueSolution(usize),
    #[error("quotient residual {residual:e} exceeds {tol:e}")]
    QuotientResidual { residual: f64, tol: f64 },
}

impl Error {
    /// Stable variant name, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::DegenerateSpectrum { .. } => "DegenerateSpectrum",
            Error::NoConvergence(_) => "NoConvergence",
            Error::SpectraOverlap(_) => "SpectraOverlap",
            Error::SingularLambda => "SingularLambda",
            Error::PartitionMismatch(_) => "PartitionMismatch",
            Error::DegenerateInstance(_) => "DegenerateInstance",
            Error::OutsideDomain(_) => "OutsideDomain",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ZeroCountMismatch { .. } => "ZeroCountMismatch",
            Error::DegenerateZeros(_) => "DegenerateZeros",
            Error::NonUniqueSolution(_) => "NonUniqueSolution",
            Error::QuotientResidual { .. } => "QuotientResidual",
        }
    }
}

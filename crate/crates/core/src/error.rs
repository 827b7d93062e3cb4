use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix is singular")]
    Singular,

    #[error("eigenvalue gap {gap:e} is below the exceptional-point threshold {threshold:e}")]
    NearDegenerate { gap: f64, threshold: f64 },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("generator is singular at exceptional point (|discriminant| = {discriminant:e})")]
    AtExceptionalPoint { discriminant: f64 },

    #[error("Hamiltonian family depends explicitly on time")]
    NotTimeIndependent,

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("path passes within {distance:e} of an exceptional point at s = {s} (clearance {clearance:e})")]
    PathThroughEp { s: f64, distance: f64, clearance: f64 },

    #[error("at least {min} integration steps per segment required, got {steps}")]
    TooFewSteps { steps: usize, min: usize },

    #[error("estimated integration error {est_error:e} exceeds tolerance {tolerance:e}")]
    StepTooCoarse { est_error: f64, tolerance: f64 },

    #[error("S^-1 U S is not diagonal at s = {s} (off-diagonal magnitude {offdiag:e})")]
    NotDiagonalizedByS { s: f64, offdiag: f64 },

    #[error("metric lost positivity at s = {s} (smallest eigenvalue {min_eigenvalue:e})")]
    PositivityLost { s: f64, min_eigenvalue: f64 },

    #[error("path endpoints do not match: {0}")]
    EndpointMismatch(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse grouping used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    InvalidConfig,
    NumericalAbort,
    Other,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::TooFewSteps { .. } => {
                ErrorClass::InvalidConfig
            }
            Error::PathThroughEp { .. }
            | Error::StepTooCoarse { .. }
            | Error::AtExceptionalPoint { .. }
            | Error::NearDegenerate { .. }
            | Error::PositivityLost { .. }
            | Error::NotDiagonalizedByS { .. } => ErrorClass::NumericalAbort,
            _ => ErrorClass::Other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

/// Everything that can go wrong in the kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum G2Error {
    #[error("degree overflow: {0} + {1} exceeds 7")]
    DegreeOverflow(usize, usize),
    #[error("expected a {expected}-form, got degree {found}")]
    WrongDegree { expected: usize, found: usize },
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("invalid form index {0:?}")]
    BadIndex(Vec<usize>),
    #[error("3-form is not positive: {0}")]
    NotPositive(String),
    #[error("bilinear form is not positive-definite")]
    NotPositiveDefinite,
    #[error("no exact root available ({0}); use float mode")]
    InexactRoot(String),
    #[error("mixed scalar modes: {0}")]
    MixedMode(String),
    #[error("tensor is not symmetric")]
    NotSymmetric,
    #[error("tensor is not traceless (trace {0:e})")]
    NotTraceless(f64),
    #[error("matrix is singular")]
    Singular,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid moduli chart: {0}")]
    InvalidChart(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("torsion calibration is not universal: residual {residual:e} on field {field}")]
    NonUniversalCalibration { field: String, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, G2Error>;

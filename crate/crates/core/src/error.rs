use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bit string: unexpected character {0:?}")]
    ParseBits(char),
    #[error("invalid channel parameters: deletion probability {0} is outside [0, 1)")]
    InvalidDeletionProbability(f64),
    #[error("exact enumeration refused: length {n} exceeds guard {limit} (pass an explicit override)")]
    LengthGuard { n: usize, limit: usize },
    #[error("invalid k-mer length {k} for source of length {n}")]
    InvalidK { k: usize, n: usize },
    #[error("window at {index} overruns source of length {n} for k = {k}")]
    IndexOutOfRange { index: usize, k: usize, n: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("ellipse parameter a = {0} is outside (0, 1/8]")]
    InvalidA(f64),
    #[error("invalid ellipse parameter rho = {0}")]
    InvalidRho(f64),
    #[error("requested Chebyshev degree {requested} is below polynomial degree {degree}")]
    InvalidDegree { requested: usize, degree: usize },
    #[error("block length {0} is not a perfect cube of an integer >= 2")]
    InvalidL(usize),
    #[error("coefficient {index} has modulus {modulus} > 1")]
    CoefficientBound { index: usize, modulus: f64 },
    #[error("analytic bound violated: {0}")]
    BoundViolation(String),
    #[error("size guard: {what} = {size} exceeds limit {limit}")]
    SizeGuard { what: &'static str, size: usize, limit: usize },
    #[error("distribution family is empty")]
    EmptyFamily,
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("trace set is empty")]
    EmptyTraceSet,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

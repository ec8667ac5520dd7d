use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bath parameters: {0}")]
    InvalidBath(String),
    #[error("correlation function is not available in closed form for the {0} bath")]
    UnsupportedBathKind(&'static str),
    #[error("quadrature did not converge: estimate {value:e}, error {error:e}, tolerance {tolerance:e}")]
    QuadratureFailure { value: f64, error: f64, tolerance: f64 },
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("power series did not converge within {0} terms")]
    NoConvergence(usize),
    #[error("time step {dt} is too large (limit {limit})")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("system too large for dense treatment: {0}")]
    TooLarge(String),
    #[error("monodromy lost unitarity: defect {0:e}")]
    UnitarityLoss(f64),
    #[error("fit data must be positive, found {0:e}")]
    NonPositiveData(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

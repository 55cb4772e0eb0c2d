use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix dimension must be positive")]
    ZeroDimension,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max |M - M^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("singular linear system (pivot {pivot:e} at column {column})")]
    Singular { pivot: f64, column: usize },

    #[error("steady state is not unique: {0}")]
    NonUniqueSteadyState(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("step too large: trace correction {correction:e} at dt = {dt}")]
    StepSize { correction: f64, dt: f64 },

    #[error("{0} is singular")]
    SingularDenominator(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

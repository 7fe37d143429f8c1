use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the spectral toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectralError {
    #[error("degenerate boundary conditions: {0}")]
    DegenerateBc(String),
    #[error("boundary conditions cannot be reduced to a canonical form: {0}")]
    NotReducible(String),
    #[error("reduced boundary conditions violate the regularity guard (p = {p})")]
    ViolatesRegularity { p: Complex64 },
    #[error("endpoint condition undefined: {0}")]
    UndefinedCondition(String),
    #[error("determinant kind {kind} does not match the boundary conditions")]
    KindMismatch { kind: String },
    #[error("quadrature did not reach the requested accuracy (estimate {estimate:e})")]
    QuadratureFailure { estimate: f64 },
    #[error("ODE step size underflow at x = {x} (mu = {mu})")]
    StiffnessFailure { x: f64, mu: Complex64 },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("zero of the determinant on the contour boundary after {attempts} inflations")]
    BoundaryZero { attempts: usize },
    #[error("root finding did not converge: {0}")]
    NonConvergence(String),
    #[error("eigenfunction construction degenerate at mu = {mu}")]
    DegenerateEigenfunction { mu: Complex64 },
    #[error("regime hypothesis violated: {0}")]
    ConditionViolated(String),
    #[error("input function is not unit-norm (norm = {norm})")]
    NormViolation { norm: f64 },
    #[error("pencil matrix is exactly singular at {at}")]
    SingularFactorization { at: Complex64 },
}

pub type Result<T> = std::result::Result<T, SpectralError>;

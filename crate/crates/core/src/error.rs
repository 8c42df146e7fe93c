use thiserror::Error;

use crate::symmat::SymMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("invalid sensor: {0}")]
    InvalidSensor(String),

    #[error("invalid sampling distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid budget: {0}")]
    InvalidBudget(String),

    #[error("sensor index {index} out of range for pool of {eta}")]
    IndexOutOfRange { index: usize, eta: usize },

    #[error("sensor {index} is not in the range of E[Z]; no finite rho exists")]
    Unbounded { index: usize },

    #[error("r(rho, zeta) is undefined for rho = zeta^2")]
    Undefined,

    #[error("insufficient samples: gamma = {gamma} but at least {required:.4} are needed")]
    InsufficientSamples { gamma: usize, required: f64 },

    #[error("invalid refinement: rho = {rho} must exceed zeta^2 = {zeta_sq}")]
    InvalidRefinement { rho: f64, zeta_sq: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("sensor {index} escapes the range of E[Z] (residual {residual:e})")]
    RangeViolation { index: usize, residual: f64 },

    #[error("lower scale (1 - r*eps) = {value} is not positive")]
    TrivialLowerScale { value: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Box<SymMatrix>,
    },

    #[error("instance generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
}

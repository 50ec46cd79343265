use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid tuple: {0}")]
    InvalidTuple(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("point lies in the joint spectrum (sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e})")]
    SingularPoint { sigma_min: f64, sigma_max: f64 },
    #[error("tuple must be normalized (first entry the identity)")]
    NotNormalized,
    #[error("outside the domain: {0}")]
    OutOfDomain(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl GeometryError {
    /// True for errors caused by a point sitting on (or too near) a spectrum.
    pub fn is_domain_violation(&self) -> bool {
        matches!(
            self,
            GeometryError::SingularPoint { .. } | GeometryError::OutOfDomain(_)
        )
    }
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

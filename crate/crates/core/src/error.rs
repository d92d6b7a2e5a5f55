use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("x = {x} lies outside the domain [-{a}, {a}]")]
    Domain { x: f64, a: f64 },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("integration failed at x = {x}: {reason}")]
    IntegrationFailure { x: f64, reason: String },

    #[error("sample grids do not match: {0}")]
    GridMismatch(String),

    #[error("potential is not even (max |V(x) - V(-x)| = {defect:e})")]
    Parity { defect: f64 },

    #[error("deficiency solutions are numerically dependent (norm ratio {ratio:e})")]
    Degeneracy { ratio: f64 },

    #[error("operation requires a {expected} basis")]
    Mode { expected: &'static str },

    #[error("matrix is not unitary (||M^H M - I||_F = {defect:e}, tolerance {tol:e})")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),

    #[error("linear system has no unique solution (sigma_min/sigma_max = {ratio:e})")]
    Uniqueness { ratio: f64 },

    #[error("boundary vectors are linearly dependent (sigma_min/sigma_max = {ratio:e})")]
    LinearIndependence { ratio: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Serialization(err.to_string())
    }
}

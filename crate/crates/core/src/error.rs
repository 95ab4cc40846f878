use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e}, largest {max_eigenvalue:.3e})")]
    NotPositiveDefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry at index {idx}: {value}")]
    NonFinite { idx: usize, value: f64 },

    #[error("tensor Gauss-Hermite quadrature supports p <= {max}, got p = {p}")]
    UnsupportedDimension { p: usize, max: usize },

    #[error("quadrature did not converge: change {change:.3e} above tolerance {tol:.3e} at {nodes} nodes")]
    QuadratureNotConverged { change: f64, tol: f64, nodes: usize },

    #[error("distribution has zero mean; size biasing is undefined")]
    ZeroMean,

    #[error("tilted law has zero mass")]
    ZeroMass,

    #[error("conditional law unavailable for index {0}")]
    ConditionalUnavailable(usize),

    #[error("tilted marginal sampler failed: {0}")]
    TiltedSamplerFailure(String),

    #[error("infeasible adjustment: {0}")]
    InfeasibleAdjustment(String),

    #[error("norm {name} is not finite")]
    NonfiniteNorm { name: &'static str },

    #[error("dependency neighborhoods are not symmetric: {0} in S({1}) but not the reverse")]
    AsymmetricNeighborhoods(usize, usize),

    #[error("instance too large for exact enumeration: {0}")]
    TooLarge(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = core::result::Result<T, Error>;

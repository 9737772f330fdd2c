use thiserror::Error;

/// Errors produced by the spectral laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bundle configuration: {0}")]
    InvalidConfig(String),

    #[error("metric is not positive definite at grid point ({i}, {j}) in {block}: smallest eigenvalue {min_eigenvalue:.6e} < floor {floor:.3e}")]
    NotPositiveDefinite {
        i: usize,
        j: usize,
        block: &'static str,
        min_eigenvalue: f64,
        floor: f64,
    },

    #[error("path parameter t = {t} leaves the admissible range; max admissible |t| is {t_max:.6e}")]
    PathOutOfRange { t: f64, t_max: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge after {iterations} iterations; best residuals {residuals:?}")]
    NoConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("eigenvalue {lambda:.12} has multiplicity {multiplicity}; the branch derivative is not defined for a degenerate cluster")]
    DegenerateCluster { lambda: f64, multiplicity: usize },

    #[error("angular resolution {n_theta} is not admissible; it must be a positive multiple of {minimal}")]
    AngularResolution { n_theta: usize, minimal: usize },

    #[error("spectral threshold {lambda} exceeds the trusted range {limit:.6e} of this grid")]
    UntrustedThreshold { lambda: f64, limit: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

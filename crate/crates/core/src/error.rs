use thiserror::Error;

/// Errors raised by the lattice workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: only 3 and 4 are implemented")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degree {degree} is out of range for this operation on a {dim}-dimensional lattice")]
    DegreeOutOfRange { degree: usize, dim: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("flux matrix is not antisymmetric")]
    NonAntisymmetricFlux,
    #[error("flux entry {value} exceeds the configured maximum {max}")]
    FluxTooLarge { value: i64, max: i64 },
    #[error("two-form is not self-dual (anti-self-dual norm {0:e})")]
    NotSelfDual(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Poisson solve did not converge after {iterations} iterations (residual {residual:e})")]
    PoissonNonConvergence { iterations: usize, residual: f64 },
    #[error("line search failed at iteration {iteration} (functional {value:e})")]
    LineSearchFailure { iteration: usize, value: f64 },
    #[error("configuration is not in temporal gauge (max |a_t| = {max_violation:e})")]
    NotTemporalGauge { max_violation: f64 },
    #[error("degenerate intersection form")]
    DegenerateForm,
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

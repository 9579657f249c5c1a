use thiserror::Error;

#[derive(Debug, Error)]
pub enum WanError {
    #[error("autodiff: {0}")]
    Autodiff(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("invalid time grid: {0}")]
    TimeGrid(String),
    #[error("point outside the domain: {0}")]
    OutsideDomain(String),
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("missing sample slice `{0}`")]
    MissingSlice(&'static str),
    #[error("degenerate test function: ‖φv‖² = {0:e}")]
    DegenerateTestFunction(f64),
    #[error("ill-posed input: {0}")]
    IllPosed(String),
    #[error("linear algebra: {0}")]
    LinearAlgebra(String),
    #[error("ascent did not converge after {iterations} iterations (gradient norm {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T, E = WanError> = std::result::Result<T, E>;

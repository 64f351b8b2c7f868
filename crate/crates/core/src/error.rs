use thiserror::Error;

/// Errors raised by the geometry engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point {point:?} lies outside the domain box")]
    Domain { point: Vec<f64> },
    #[error("finite-difference stencil around {point:?} with step {step} leaves the domain box")]
    Step { point: Vec<f64>, step: f64 },
    #[error("induced metric is singular (smallest eigenvalue {0:e})")]
    SingularMetric(f64),
    #[error("normal frame degenerate: {0}")]
    FrameDegeneracy(String),
    #[error("unsupported morphism: {0}")]
    UnsupportedMorphism(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("no admissible (p,q) found: {0}")]
    NotFound(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("boundedness certificate violated: {0}")]
    Certificate(String),
    #[error("structure error: {0}")]
    Structure(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

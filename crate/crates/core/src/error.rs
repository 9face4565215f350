use nalgebra::Complex;

/// Errors produced by the numerical routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("gamma function has a pole at z = {0}")]
    GammaPole(f64),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("series did not converge within {terms} terms")]
    SeriesNonConvergence { terms: usize },

    #[error("quadrature would need {needed} nodes (limit {limit}); rescale the contour")]
    QuadratureTooLarge { needed: usize, limit: usize },

    #[error("contour is not admissible for the operator sector: {0}")]
    SectorViolation(String),

    #[error("shifted system is singular at {0}")]
    Singular(Complex<f64>),

    #[error("operator is not normal: commutator norm {0:.3e}")]
    NotNormal(f64),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

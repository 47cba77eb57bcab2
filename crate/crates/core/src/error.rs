use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degree quantization failed: integral {value} is {residual:.3e} away from an integer")]
    Quantization { value: f64, residual: f64 },

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("flux error: {0}")]
    Flux(String),

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (worst residual {worst_residual:.3e}, target {target:.3e})"
    )]
    Convergence {
        iterations: usize,
        worst_residual: f64,
        target: f64,
    },

    #[error("no eigenvalue above the zero threshold {threshold:e} among {count} computed values")]
    EmptySpectrum { threshold: f64, count: usize },

    #[error("kernel vector has chirality expectation {expectation:.4}, cannot classify")]
    ChiralityAmbiguity { expectation: f64 },

    #[error("degree mismatch: bundle declares {declared}, curvature integrates to {integrated}")]
    DegreeMismatch { declared: i64, integrated: i64 },

    #[error("bound not applicable: {0}")]
    Applicability(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("at family parameter t = {t}: {source}")]
    Family { t: f64, source: Box<Error> },
}

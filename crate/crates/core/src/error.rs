use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("outside chart domain: {0}")]
    Domain(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("evaluation at a cone point")]
    Pole,
    #[error("indicial collision at exponent {exponent}, degree {degree}")]
    IndicialCollision { exponent: String, degree: u32 },
    #[error("prior truncation {have} is below the required {need}")]
    Truncation { have: String, need: String },
    #[error("iteration diverged: {0}")]
    Divergence(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("linearization not invertible: spectral gap {gap} is within {margin} of the threshold")]
    SpectralGap { gap: f64, margin: f64 },
    #[error("singular linear system")]
    Singular,
    #[error("fit failure: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

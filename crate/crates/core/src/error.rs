use thiserror::Error;

/// Errors raised by the pricers and their validation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("invalid market state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("method requires {expected} regimes, model has {found}")]
    UnsupportedRegimeCount { expected: usize, found: usize },

    #[error("degenerate volatilities: |sigma1^2 - sigma2^2| = {gap:e}")]
    DegenerateVolatilities { gap: f64 },

    #[error("quadrature not converged: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureNotConverged { estimate: f64, tolerance: f64 },

    #[error("interpolation out of range: {0}")]
    InterpolationOutOfRange(String),

    #[error("extrapolation refused: {0}")]
    ExtrapolationRefused(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),
}

impl PricingError {
    /// True for errors caused by bad inputs rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            PricingError::InvalidModel(_)
                | PricingError::InvalidOption(_)
                | PricingError::InvalidState(_)
                | PricingError::InvalidConfig(_)
                | PricingError::Domain(_)
                | PricingError::UnsupportedRegimeCount { .. }
                | PricingError::NotApplicable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, PricingError>;

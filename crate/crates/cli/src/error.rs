use regime_asian::PricingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("invalid config: {0}")]
    Validation(String),

    #[error(transparent)]
    Pricing(#[from] PricingError),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Schema { .. } | CliError::Validation(_) => 2,
            CliError::Pricing(e) if e.is_validation() => 2,
            CliError::Pricing(_) | CliError::Write { .. } => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

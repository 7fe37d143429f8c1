use slriesz::SpectralError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Spectral(#[from] SpectralError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit status: 2 for unusable input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => 2,
            CliError::Spectral(e) => match e {
                SpectralError::DegenerateBc(_)
                | SpectralError::NotReducible(_)
                | SpectralError::ViolatesRegularity { .. }
                | SpectralError::UndefinedCondition(_)
                | SpectralError::KindMismatch { .. }
                | SpectralError::OutOfRange(_)
                | SpectralError::ConditionViolated(_)
                | SpectralError::NormViolation { .. } => 2,
                SpectralError::QuadratureFailure { .. }
                | SpectralError::StiffnessFailure { .. }
                | SpectralError::BoundaryZero { .. }
                | SpectralError::NonConvergence(_)
                | SpectralError::DegenerateEigenfunction { .. }
                | SpectralError::SingularFactorization { .. } => 3,
            },
        }
    }
}

use simex_core::Error as CoreError;

/// Failures surfaced by the command line, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("method failure: {0}")]
    Method(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) | Self::Io(_) => 3,
            Self::Method(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidDistribution(_)
            | CoreError::TooFewReplicates
            | CoreError::InvalidContrast(_)
            | CoreError::InvalidGrid(_)
            | CoreError::NegativeLambda(_)
            | CoreError::NonIntegerLambda(_)
            | CoreError::Config(_) => Self::Config(msg),
            CoreError::EmptyErrorSet
            | CoreError::DimensionMismatch { .. }
            | CoreError::TooFewObservations { .. }
            | CoreError::InvalidData(_)
            | CoreError::MalformedInterval { .. } => Self::Data(msg),
            CoreError::NoConvergence { .. }
            | CoreError::Separation { .. }
            | CoreError::SingularMatrix
            | CoreError::TooFewPoints { .. }
            | CoreError::ExtrapolantPole { .. }
            | CoreError::ReplicateFailures { .. }
            | CoreError::BootstrapFailures { .. } => Self::Method(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

use alloc::string::String;

/// Errors produced anywhere in the correction pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty error set")]
    EmptyErrorSet,

    #[error("invalid distribution parameters: {0}")]
    InvalidDistribution(&'static str),

    #[error("contrast requires at least two replicates")]
    TooFewReplicates,

    #[error("invalid contrast: {0}")]
    InvalidContrast(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {needed} observations, found {found}")]
    TooFewObservations { needed: usize, found: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("separation: coefficients diverged past {cap}")]
    Separation { cap: f64 },

    #[error("singular matrix")]
    SingularMatrix,

    #[error("lambda must be non-negative, got {0}")]
    NegativeLambda(f64),

    #[error("nonparametric remeasurement needs an integer lambda, got {0}")]
    NonIntegerLambda(f64),

    #[error("invalid lambda grid: {0}")]
    InvalidGrid(&'static str),

    #[error("too few points for extrapolant: need {needed}, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("extrapolant pole at lambda = {pole} inside [-1, {max_lambda}]")]
    ExtrapolantPole { pole: f64, max_lambda: f64 },

    #[error("{failed} of {total} remeasured fits failed at lambda = {lambda}")]
    ReplicateFailures {
        lambda: f64,
        failed: usize,
        total: usize,
    },

    #[error("{failed} of {total} bootstrap replicates failed")]
    BootstrapFailures { failed: usize, total: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed interval [{lo}, {hi}]")]
    MalformedInterval { lo: f64, hi: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

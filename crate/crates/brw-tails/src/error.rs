use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    /// The contraction condition k_beta < 1 failed for a heavy-tail family.
    #[error("moment condition violated: k_beta = {k_beta:.6} >= 1")]
    MomentConditionViolated { k_beta: f64 },
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("truncation budget exceeded: residual bound {bound:.3e} after {points} points")]
    TruncationBudgetExceeded { bound: f64, points: usize },
    #[error("not a heavy-tail family: {0}")]
    NotHeavyTail(String),
    #[error("trajectory failed: population cap exhausted")]
    FailedTrajectory,
    #[error("no closed-form size-biased offspring law for family: {0}")]
    UnsupportedFamily(String),
    #[error("perpetuity products failed to contract below the truncation level within {0} steps")]
    NonContracting(usize),
    #[error("beta = {0} out of range: the perpetuity tail argument needs beta > 2")]
    BetaOutOfRange(f64),
    #[error("empty sample")]
    EmptySample,
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),
    #[error("samples must be strictly positive")]
    NonPositiveSample,
    #[error("level {0:.3e} too deep: fewer than {1} reference exceedances")]
    LevelTooDeep(f64, usize),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("output unwritable: {path}: {source}")]
    OutputUnwritable {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad input data: {0}")]
    BadData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("cavity decay kappa must be positive, got {0}")]
    NonPositiveKappa(f64),
    #[error("parameter `{name}` must be {requirement}, got {value}")]
    OutOfRange {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error("correlation functions are undefined without a drive (E = 0)")]
    ZeroDrive,
    #[error("mean photon number must be positive")]
    ZeroMean,
    #[error("mean photon number {0:e} is numerically zero")]
    ZeroMeanPhoton(f64),
    #[error("operator dimension {0} is too small (need at least 2)")]
    DimTooSmall(usize),
    #[error("amplitude vector has length {0}, need at least 4")]
    LengthTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("amplitude steady-state system is singular")]
    SingularSystem,
    #[error("constrained Liouvillian system is singular")]
    SingularAfterConstraint,
    #[error("steady state failed the positivity check (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("invalid integration step or time grid: {0}")]
    StepInvalid(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("unknown figure preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("observable `{observable}` is not available from the {source_name} path")]
    Unsupported {
        observable: String,
        source_name: &'static str,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failed solve.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::SingularSystem
                | Error::SingularAfterConstraint
                | Error::ZeroMeanPhoton(_)
                | Error::NotPositive(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

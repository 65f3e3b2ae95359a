use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid level system: {0}")]
    InvalidSystem(String),

    #[error("invalid control field: {0}")]
    InvalidField(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("site index {index} out of range for a {count}-level system")]
    SiteOutOfRange { index: usize, count: usize },

    #[error("step index {index} out of range for a grid of {steps} steps")]
    StepOutOfRange { index: usize, steps: usize },

    #[error("step generator is not Hermitian at step {step} (deviation {deviation:e})")]
    NonHermitian { step: usize, deviation: f64 },

    #[error("norm drift {drift:e} at step {step} exceeds tolerance {tolerance:e}")]
    NormDrift { step: usize, drift: f64, tolerance: f64 },

    #[error("negative jump probability {value:e} from site {site}")]
    NegativeProbability { site: usize, value: f64 },

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("all fit windows were excluded")]
    AllExcluded,

    #[error("malformed data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonHermitian { .. }
                | Error::NormDrift { .. }
                | Error::NegativeProbability { .. }
                | Error::Degenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use alloc::string::String;

/// Errors raised by estimation, calibration and simulation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model fit diverged: {0}")]
    FitDiverged(String),

    #[error("design matrix is singular (collinear covariates)")]
    SingularDesign,

    /// The censoring survival estimate is zero just before an uncensored
    /// time, so that observation cannot be inverse weighted.
    #[error("censoring survival is zero just before uncensored time {time}")]
    WeightDegenerate { time: f64 },

    #[error("only {found} uncensored observations exceed c_L = {c_l}; at least {required} are needed")]
    InsufficientSupport { c_l: f64, found: usize, required: usize },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("censoring rate {target} could not be reached: {reason}")]
    CalibrationFailed { target: f64, reason: String },
}

impl Error {
    /// Stable machine-readable code, used in CLI and HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::FitDiverged(_) => "fit_diverged",
            Error::SingularDesign => "singular_design",
            Error::WeightDegenerate { .. } => "weight_degenerate",
            Error::InsufficientSupport { .. } => "insufficient_support",
            Error::InvalidSplit(_) => "invalid_split",
            Error::CalibrationFailed { .. } => "calibration_failed",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by state construction, operator application and estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsError {
    #[error("invalid OAM window: {0}")]
    InvalidWindow(String),
    #[error("OAM distribution is empty")]
    EmptyDistribution,
    #[error("OAM index {index} lies in the guard band or outside the window")]
    SupportInGuardBand { index: i64 },
    #[error("all amplitudes are zero; state cannot be normalized")]
    NonNormalizable,
    #[error("shift moves amplitude from OAM index {from} to {to}, outside the interior of the window")]
    ShiftIntoGuardBand { from: i64, to: i64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state is not normalized (norm² = {norm_sqr})")]
    UnnormalizedState { norm_sqr: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("finite-difference step {step} outside [1e-7, 1e-3]")]
    StepTooSmall { step: f64 },
    #[error("probability {p} too close to 0 or 1 for Fisher information")]
    DegenerateOperatingPoint { p: f64 },
    #[error("non-positive input: {0}")]
    NonPositiveInput(String),
    #[error("measured probability {p_hat} inconsistent with the hinted branch")]
    OutOfBranch { p_hat: f64 },
    #[error("operating point at a fringe extremum; inversion is singular")]
    DegeneratePoint,
    #[error("sweep does not cover a full fringe period: {0}")]
    InsufficientSpan(String),
    #[error("fit did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("scaling study needs at least 3 (m, l) pairs, got {0}")]
    InsufficientPairs(usize),
    #[error("trace stage {stage} inconsistent with its element operator")]
    StageMismatch { stage: String },
}

pub type Result<T, E = QsError> = std::result::Result<T, E>;

use alloc::string::String;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("arm set is empty")]
    EmptyArmSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("arms span a {rank}-dimensional subspace of R^{dim}")]
    RankDeficient { rank: usize, dim: usize },

    #[error("information matrix is singular")]
    SingularMatrix,

    #[error("design did not reach tolerance after {iterations} iterations (g = {achieved}, target {target})")]
    NotConverged {
        achieved: f64,
        target: f64,
        iterations: usize,
    },

    #[error("point set has affine rank {rank} in R^{dim}")]
    AffinelyDegenerate { rank: usize, dim: usize },

    #[error("convex combination misses its target by {residual}")]
    InconsistentCombination { residual: f64 },

    #[error("arm {arm} has mean {mean} outside the range of the {model} reward model")]
    MeanOutOfRange {
        arm: usize,
        mean: f64,
        model: &'static str,
    },

    #[error("arm index {index} out of range for {len} arms")]
    ArmIndex { index: usize, len: usize },

    #[error("leverage hypothesis violated at pull {index}: {leverage} > {gamma}")]
    LeverageViolated {
        index: usize,
        leverage: f64,
        gamma: f64,
    },

    #[error("horizon {horizon} is shorter than the minimum {min}")]
    InfeasibleHorizon { horizon: usize, min: usize },

    #[error("run logs disagree: {0}")]
    MismatchedLogs(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

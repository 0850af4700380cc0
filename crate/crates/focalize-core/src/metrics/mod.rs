//! Accuracy, agreement and significance statistics.

mod alpha;
mod confusion;
mod hypothesis;
pub mod special;

use thiserror::Error;

pub use alpha::{krippendorff_alpha, AlphaResult, ReliabilityMatrix};
pub use confusion::{
    average_reports, confusion, prf, ClassScores, ConfusionMatrix, PrfReport, INVALID_COLUMN,
};
pub use hypothesis::{anova_oneway, pearson, pearson_t, sample_variance, welch_t, TestResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("predictions share no excerpt with the gold set")]
    NoOverlap,
    #[error("reliability data needs at least 2 annotators, got {0}")]
    TooFewAnnotators(usize),
    #[error("unit has a different number of cells than annotators")]
    RaggedMatrix,
    #[error("no unit has two or more values")]
    NoPairableUnits,
    #[error("sample lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
}

//! Correlation statistics and threshold-based classification metrics.

mod correlation;
mod join;
mod threshold;

pub use correlation::{average_ranks, correlations, krcc, plcc, srcc, Correlations};
pub use join::{element_samples, overall_pairs, ElementSamples};
pub use threshold::{
    f1_threshold, grid, recall_rate, structural_accuracy, threshold_search, F1Mean, F1Result,
    ThresholdResult, DEFAULT_STEP,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("empty input")]
    Empty,
    #[error("value at index {0} is not finite")]
    NonFinite(usize),
    #[error("series `{0}` is constant; correlation is undefined")]
    Constant(&'static str),
    #[error("label at index {0} is not 0 or 1")]
    NotBinary(usize),
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("step {0} does not divide [0, 1] into a whole number of intervals")]
    BadStep(f64),
    #[error("{0} category tags for {1} samples")]
    CategoryCount(usize, usize),
    #[error("no prediction for pair `{0}`")]
    MissingPrediction(String),
}

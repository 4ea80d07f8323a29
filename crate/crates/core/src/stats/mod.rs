//! Correlation, cross-correlation, and changepoint machinery for panel
//! columns and time series.

mod changepoint;
mod correlation;
mod crosscorr;

pub use changepoint::{changepoint, ChangepointResult};
pub use correlation::{
    pairwise_complete, pearson, spearman, CorrelationMethod, CorrelationResult, PValueMethod,
};
pub use crosscorr::{cross_correlation, CrossCorrelationResult, LagCoefficient};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("not computable: {0}")]
    NotComputable(String),
}

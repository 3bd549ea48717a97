//! Bootstrap confidence intervals, paired difference tests and seed
//! deviation scores.

mod bootstrap;
mod deviation;
pub mod rng;

pub use bootstrap::{
    bootstrap_ci, paired_diff, percentile, BootstrapCI, PairedDiffResult, DEFAULT_RESAMPLES,
    MIN_CLASS_COUNT, MIN_RELIABLE_N,
};
pub use deviation::{deviation_score, DeviationScores};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("cannot bootstrap an empty outcome list")]
    EmptyOutcomes,
    #[error("paired outcome lists differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("resample count must be at least 1")]
    NoResamples,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

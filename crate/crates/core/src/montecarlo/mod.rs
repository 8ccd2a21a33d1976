//! Monte Carlo estimation of exceedance probabilities.
//!
//! Conditionally on the background path the queue length is Poisson, so
//! every estimator averages the exact Poisson tail over sampled paths.
//! Rare levels are handled by sampling the paths near the maximizing one
//! from a conditioned law and reweighting.

mod estimators;
mod rng;
mod sampler;
mod stats;

pub use estimators::{
    capacity_fast, capacity_search, capacity_search_from, combined_estimator,
    combined_estimator_on, default_delta, efficiency_diagnostic, fit_decay_rate, is_estimator,
    is_estimator_on, naive_estimator, naive_mean, paired_mean, run_sharded, sample_values,
    split_mean, tube_for, tube_from, CapacityMode, CapacityResult, EfficiencyReport, EfficiencyRow,
    IsConfig, Tube,
};
pub use rng::RngStream;
pub use sampler::{sample_initial, sample_path, sample_path_full, SampledPath};
pub use stats::{Accumulator, Estimate, Z95};

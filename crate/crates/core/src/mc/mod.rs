//! Monte Carlo: joint (X, Y) paths, conditional resampling of X, and default
//! times by total hazard construction.
//!
//! Every path index owns its own ChaCha stream derived from the run seed, so
//! results do not depend on how paths are scheduled across threads.

mod hazard;
mod paths;
mod sampler;
mod simulate;
mod stats;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use hazard::{inverse_hazard, segment_hazard, total_hazard};
pub use paths::{sample_joint_paths, sample_joint_paths_from, ChainPath, ExponentialDraws, YPath};
pub use sampler::{forward_filter_marginals, resample_x_given_observables, SamplerOptions};
pub use simulate::{
    simulate_batch, simulate_default_times, simulate_map, simulate_path, write_samples_csv, DefaultRecord, SimOptions,
    SimStart, XResampling,
};
pub use stats::{chi_square, empirical_stats, ks_distance, proportion, survival_curve, ChiSquareResult, Estimate, EstimatorSpec};

use crate::chain::ChainError;
use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("invalid time window [{start}, {end}]")]
    InvalidHorizon { start: f64, end: f64 },
    #[error("state index must be 0 or 1, got {0}")]
    InvalidState(usize),
    #[error("times must be strictly increasing and inside the window (offending value {0})")]
    UnorderedTimes(f64),
    #[error("exponential thresholds must be finite and positive")]
    InvalidThreshold,
    #[error("the observed Y path has zero likelihood near t = {0}")]
    DegenerateEvidence(f64),
    #[error("at least one path is required")]
    NoPaths,
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Generator for path `index` of a run seeded with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

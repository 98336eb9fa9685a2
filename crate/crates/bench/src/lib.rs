//! Shared fixtures for the benchmarks.

use weits_core::data::{benchmark_spec, synthesize};
use weits_core::model::ModelConfig;

/// Noisy multi-frequency series of length `n`.
pub fn series(n: usize) -> Vec<f64> {
    synthesize(&benchmark_spec(n, 0.05, 7)).unwrap().values().to_vec()
}

pub fn small_model(lookback: usize, horizon: usize) -> ModelConfig {
    ModelConfig {
        n_stacks: 3,
        blocks_per_stack: 2,
        lookback,
        horizon,
        ..ModelConfig::default()
    }
}

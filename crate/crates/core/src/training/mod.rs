//! Windowing, metrics, optimization and checkpointing.

mod adam;
mod checkpoint;
mod config;
mod metrics;
mod trainer;
mod windows;

pub use adam::{adam_step, check_gradients, clip_global_norm, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, FORMAT_VERSION};
pub use config::{Loss, TrainConfig, Validation};
pub use metrics::{horizon_metrics, mae, mse, persistence_forecast, HorizonMetrics};
pub use trainer::{evaluate_loss, history_csv, train, write_history, EpochRecord, TrainOutcome};
pub use windows::{make_windows, WindowSet};

use serde::{Deserialize, Serialize};

use super::adam::AdamConfig;
use crate::error::{Error, Result};

/// When validation runs, and therefore what patience counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validation {
    #[default]
    Epoch,
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    #[default]
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub warmup_fraction: f64,
    /// Per-epoch linear decay of the learning rate once warmup ends.
    pub decay_slope: f64,
    /// Validation checks without improvement before stopping.
    pub patience: usize,
    pub validation: Validation,
    pub batch_size: usize,
    /// Batch size used when the training set is smaller than `batch_size`.
    pub min_batch_size: usize,
    pub shuffle: bool,
    pub stride: usize,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub loss: Loss,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            epochs: 100,
            warmup_fraction: 0.1,
            decay_slope: 1e-3,
            patience: 50,
            validation: Validation::Epoch,
            batch_size: 128,
            min_batch_size: 16,
            shuffle: true,
            stride: 1,
            clip_norm: Some(10.0),
            loss: Loss::Mse,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return bad(format!("warmup_fraction must lie in (0, 1), got {}", self.warmup_fraction));
        }
        if self.decay_slope < 0.0 {
            return bad("decay_slope must be >= 0".into());
        }
        if self.epochs == 0 || self.patience == 0 {
            return bad("epochs and patience must be >= 1".into());
        }
        if self.batch_size == 0 || self.min_batch_size == 0 || self.stride == 0 {
            return bad("batch_size, min_batch_size and stride must be >= 1".into());
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return bad("clip_norm must be > 0".into());
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.eps > 0.0) {
            return bad("adam betas must lie in [0, 1) and eps must be > 0".into());
        }
        Ok(())
    }

    /// Batch size actually used for `n` training windows.
    pub fn effective_batch_size(&self, n: usize) -> usize {
        if n >= self.batch_size {
            self.batch_size
        } else {
            self.min_batch_size.min(n).max(1)
        }
    }

    /// Learning rate at a fractional epoch: a linear ramp from zero over the warmup
    /// span, then `lr * (1 - slope * epochs_since_warmup)`, never below zero.
    pub fn lr_at(&self, epoch: f64) -> f64 {
        let warmup = self.warmup_fraction * self.epochs as f64;
        if epoch < warmup {
            self.learning_rate * epoch / warmup
        } else {
            self.learning_rate * (1.0 - self.decay_slope * (epoch - warmup)).max(0.0)
        }
    }
}

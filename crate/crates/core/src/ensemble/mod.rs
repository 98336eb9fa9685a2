//! Bagging over independently seeded models.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{predict, ModelConfig, ModelParams};
use crate::series::Series;
use crate::training::{train, Checkpoint, TrainConfig, TrainOutcome, WindowSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Median,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub size: usize,
    pub aggregation: Aggregation,
    /// Train each member on windows drawn with replacement.
    pub bootstrap: bool,
    /// Members use `base_seed, base_seed + 1, ...` unless `seeds` is given.
    pub base_seed: u64,
    pub seeds: Option<Vec<u64>>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            size: 5,
            aggregation: Aggregation::Median,
            bootstrap: false,
            base_seed: 0,
            seeds: None,
        }
    }
}

impl EnsembleConfig {
    pub fn member_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.size as u64).map(|i| self.base_seed.wrapping_add(i)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let seeds = self.member_seeds();
        if self.size == 0 || seeds.len() != self.size {
            return Err(Error::InvalidConfig(format!(
                "ensemble size {} must be >= 1 and match the {} listed seeds",
                self.size,
                seeds.len()
            )));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(Error::InvalidConfig("ensemble seeds must be distinct".into()));
        }
        Ok(())
    }
}

/// Member forecasts for one window and their elementwise combination.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleForecast {
    pub member_forecasts: Vec<Series>,
    pub aggregated: Series,
}

#[derive(Debug, Clone)]
pub struct Member {
    pub seed: u64,
    pub outcome: TrainOutcome,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Elementwise median or mean of equally long forecasts.
pub fn aggregate<S: AsRef<[f64]>>(members: &[S], method: Aggregation) -> Result<Series> {
    let first = members.first().ok_or(Error::EmptySeries)?.as_ref();
    let h = first.len();
    for m in members {
        if m.as_ref().len() != h {
            return Err(Error::ShapeMismatch {
                op: "aggregate",
                expected: format!("length {h}"),
                found: format!("length {}", m.as_ref().len()),
            });
        }
    }
    let mut column = vec![0.0; members.len()];
    Ok((0..h)
        .map(|j| {
            for (c, m) in column.iter_mut().zip(members) {
                *c = m.as_ref()[j];
            }
            match method {
                Aggregation::Median => median(&mut column),
                Aggregation::Mean => column.iter().sum::<f64>() / column.len() as f64,
            }
        })
        .collect())
}

/// Window indices drawn uniformly with replacement, from a stream separate from the
/// member's training seed.
pub fn bootstrap_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB007_5742_u64.rotate_left(32));
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// The configs a single member trains with: both seeds replaced by the member seed.
pub fn member_configs(model: &ModelConfig, train_cfg: &TrainConfig, seed: u64) -> (ModelConfig, TrainConfig) {
    (
        ModelConfig { seed, ..model.clone() },
        TrainConfig {
            seed,
            ..train_cfg.clone()
        },
    )
}

/// Trains every member, at most `jobs` at a time (all available threads when `None`).
/// Results come back in seed-list order.
pub fn train_ensemble(
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    ens: &EnsembleConfig,
    train_set: &WindowSet,
    val_set: &WindowSet,
    jobs: Option<usize>,
) -> Result<Vec<Member>> {
    ens.validate()?;
    let run = |seed: u64| -> Result<Member> {
        let (m, t) = member_configs(model, train_cfg, seed);
        let resampled;
        let set = if ens.bootstrap {
            resampled = train_set.select(&bootstrap_indices(train_set.len(), seed));
            &resampled
        } else {
            train_set
        };
        train(&m, set, val_set, &t)
            .map(|outcome| Member { seed, outcome })
            .map_err(|e| Error::EnsembleMember {
                seed,
                source: Box::new(e),
            })
    };
    let seeds = ens.member_seeds();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| seeds.par_iter().map(|&s| run(s)).collect())
}

/// Forecasts of every member for each window, aggregated elementwise.
pub fn ensemble_predict(
    windows: &[&[f64]],
    members: &[ModelParams],
    cfg: &ModelConfig,
    method: Aggregation,
) -> Result<Vec<EnsembleForecast>> {
    let per_member: Vec<Vec<Series>> = members.iter().map(|p| predict(windows, p, cfg)).collect::<Result<_>>()?;
    (0..windows.len())
        .map(|w| {
            let member_forecasts: Vec<Series> = per_member.iter().map(|m| m[w].clone()).collect();
            let aggregated = aggregate(&member_forecasts, method)?;
            Ok(EnsembleForecast {
                member_forecasts,
                aggregated,
            })
        })
        .collect()
}

pub fn member_checkpoint_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join("ensemble").join(seed.to_string()).join("checkpoint.csv")
}

/// Writes each member to `dir/ensemble/{seed}/checkpoint.csv`.
pub fn save_members(dir: &Path, members: &[Member], model: &ModelConfig) -> Result<()> {
    for m in members {
        let cfg = ModelConfig {
            seed: m.seed,
            ..model.clone()
        };
        Checkpoint::new(&cfg, &m.outcome.params, m.outcome.best_epoch, m.outcome.best_val_loss)
            .save(&member_checkpoint_path(dir, m.seed))?;
    }
    Ok(())
}

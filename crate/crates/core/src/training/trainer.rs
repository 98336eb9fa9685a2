use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, clip_global_norm, AdamState};
use super::config::{TrainConfig, Validation};
use super::windows::WindowSet;
use crate::error::{Error, Result};
use crate::model::{forward_on_tape, predict_batch, Mode, ModelConfig, ModelParams};
use crate::nn::{Tape, Tensor};

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the best validation check.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
}

/// Mean squared error over every window and horizon step.
pub fn evaluate_loss(params: &ModelParams, cfg: &ModelConfig, set: &WindowSet) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    let idx: Vec<usize> = (0..set.len()).collect();
    for chunk in idx.chunks(256) {
        let (x, y) = set.batch(chunk)?;
        let pred = predict_batch(&x, params, cfg)?;
        total += pred.data().iter().zip(y.data()).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
        count += y.len();
    }
    Ok(total / count as f64)
}

fn loss_and_grads(
    params: &ModelParams,
    cfg: &ModelConfig,
    x: &Tensor,
    y: &Tensor,
    mode: &mut Mode,
) -> Result<(f64, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let vars = forward_on_tape(&mut tape, params, cfg, x, mode)?;
    let target = tape.constant(y.clone());
    let loss = tape.mse_loss(vars.global, target)?;
    let value = tape.value(loss).item();
    if !value.is_finite() {
        return Ok((value, Vec::new()));
    }
    let grads = tape.backward(loss)?.params(&params.store().shapes());
    Ok((value, grads))
}

struct Tracker {
    best: Option<(f64, usize, ModelParams)>,
    since_improvement: usize,
}

impl Tracker {
    /// Records a validation result; returns true when patience has run out.
    fn observe(&mut self, val: f64, epoch: usize, params: &ModelParams, patience: usize) -> bool {
        match &self.best {
            Some((b, _, _)) if val >= *b => {
                self.since_improvement += 1;
            }
            _ => {
                self.best = Some((val, epoch, params.clone()));
                self.since_improvement = 0;
            }
        }
        self.since_improvement >= patience
    }
}

/// Trains a freshly initialized model with Adam, keeping the best validation checkpoint.
pub fn train(model_cfg: &ModelConfig, train_set: &WindowSet, val_set: &WindowSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
    model_cfg.validate()?;
    cfg.validate()?;
    for (name, set) in [("train", train_set), ("validation", val_set)] {
        if set.is_empty() {
            return Err(Error::PartitionTooShort {
                partition: name,
                len: 0,
                required: 1,
            });
        }
        if set.input(0).len() != model_cfg.lookback || set.target(0).len() != model_cfg.horizon {
            return Err(Error::ShapeMismatch {
                op: "train",
                expected: format!("windows ({}, {})", model_cfg.lookback, model_cfg.horizon),
                found: format!("windows ({}, {})", set.input(0).len(), set.target(0).len()),
            });
        }
    }

    let mut params = ModelParams::init(model_cfg)?;
    let mut state = AdamState::new(&params.store().shapes());
    let names = params.store().names().to_vec();
    let trainable = params.trainable().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let n = train_set.len();
    let bs = cfg.effective_batch_size(n);
    let steps = n.div_ceil(bs);
    let mut order: Vec<usize> = (0..n).collect();
    let mut tracker = Tracker {
        best: None,
        since_improvement: 0,
    };
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut stopped_early = false;
    let mut batch_index = 0usize;

    'epochs: for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        let mut lr = 0.0;
        for (s, chunk) in order.chunks(bs).enumerate() {
            let (x, y) = train_set.batch(chunk)?;
            let (loss, mut grads) = {
                let mut mode = Mode::training(&mut rng);
                loss_and_grads(&params, model_cfg, &x, &y, &mut mode)?
            };
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    batch: Some(batch_index),
                });
            }
            if let Some(c) = cfg.clip_norm {
                clip_global_norm(&mut grads, c);
            }
            lr = cfg.lr_at((epoch - 1) as f64 + (s + 1) as f64 / steps as f64);
            adam_step(
                &mut state,
                params.store_mut().tensors_mut(),
                &grads,
                &trainable,
                &names,
                lr,
                &cfg.adam,
            )?;
            loss_sum += loss * chunk.len() as f64;
            seen += chunk.len();
            batch_index += 1;

            if cfg.validation == Validation::Step && s + 1 < steps {
                let val = evaluate_loss(&params, model_cfg, val_set)?;
                if tracker.observe(val, epoch, &params, cfg.patience) {
                    history.push(EpochRecord {
                        epoch,
                        lr,
                        train_loss: loss_sum / seen as f64,
                        val_loss: val,
                    });
                    stopped_early = true;
                    break 'epochs;
                }
            }
        }
        let val = evaluate_loss(&params, model_cfg, val_set)?;
        history.push(EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / seen as f64,
            val_loss: val,
        });
        if tracker.observe(val, epoch, &params, cfg.patience) {
            stopped_early = epoch < cfg.epochs;
            break;
        }
    }

    let (best_val_loss, best_epoch, params) = tracker.best.expect("at least one validation check");
    Ok(TrainOutcome {
        params,
        best_epoch,
        best_val_loss,
        history,
        stopped_early,
    })
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,lr,train_loss,val_loss\n");
    for r in history {
        let _ = writeln!(s, "{},{},{},{}", r.epoch, r.lr, r.train_loss, r.val_loss);
    }
    s
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    fs::write(path, history_csv(history)).map_err(|e| Error::io(path, e))
}

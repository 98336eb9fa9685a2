use weits_core::model::ModelConfig;
use weits_core::training::{
    evaluate_loss, history_csv, make_windows, train, Checkpoint, TrainConfig, Validation, WindowSet,
};
use weits_core::{Error, Series};

fn small_model(seed: u64) -> ModelConfig {
    ModelConfig {
        n_stacks: 3,
        blocks_per_stack: 2,
        lookback: 32,
        horizon: 8,
        seed,
        ..ModelConfig::default()
    }
}

fn wavy(n: usize) -> Vec<f64> {
    (0..n).map(|t| (t as f64 * 0.3).sin() + 0.5 * (t as f64 * 0.05).cos()).collect()
}

#[test]
fn overfits_one_window() {
    let m = ModelConfig {
        n_stacks: 3,
        blocks_per_stack: 2,
        lookback: 96,
        horizon: 24,
        seed: 1,
        ..ModelConfig::default()
    };
    let s: Vec<f64> = (0..120).map(|t| (t as f64 * 0.3).sin() + 0.01 * t as f64).collect();
    let w = make_windows(&s, 96, 24, 1).unwrap();
    let t = TrainConfig {
        learning_rate: 1e-3,
        epochs: 500,
        patience: 500,
        seed: 1,
        ..TrainConfig::default()
    };
    let out = train(&m, &w, &w, &t).unwrap();
    assert!(evaluate_loss(&out.params, &m, &w).unwrap() < 1e-3);
}

#[test]
fn linear_trend_beats_persistence() {
    let s: Vec<f64> = (0..400).map(|t| -1.5 + 3.0 * t as f64 / 280.0).collect();
    let train_w = make_windows(&s[..280], 32, 8, 1).unwrap();
    let val_w = make_windows(&s[280 - 32..320], 32, 8, 1).unwrap();
    let m = ModelConfig {
        dropout: 0.0,
        ..small_model(1)
    };
    let t = TrainConfig {
        learning_rate: 1e-2,
        epochs: 600,
        patience: 600,
        seed: 1,
        ..TrainConfig::default()
    };
    let out = train(&m, &train_w, &val_w, &t).unwrap();
    let persistence: f64 = val_w
        .inputs()
        .iter()
        .zip(val_w.targets())
        .map(|(x, y)| y.iter().map(|v| (v - x[31]).powi(2)).sum::<f64>() / 8.0)
        .sum::<f64>()
        / val_w.len() as f64;
    assert!(out.best_val_loss < 0.1 * persistence, "{} vs {persistence}", out.best_val_loss);
}

#[test]
fn patience_one_keeps_first_epoch() {
    let x = Series::new(wavy(32));
    let train_w = WindowSet::from_pairs(vec![(x.clone(), Series::new(vec![2.0; 8]))]).unwrap();
    let val_w = WindowSet::from_pairs(vec![(x, Series::new(vec![-2.0; 8]))]).unwrap();
    let t = TrainConfig {
        learning_rate: 1e-3,
        epochs: 50,
        patience: 1,
        ..TrainConfig::default()
    };
    let m = ModelConfig {
        dropout: 0.0,
        ..small_model(2)
    };
    let out = train(&m, &train_w, &val_w, &t).unwrap();
    assert_eq!(out.best_epoch, 1);
    assert_eq!(out.history.len(), 2);
    assert!(out.history[1].val_loss > out.history[0].val_loss);
    assert!(out.stopped_early);
    assert_eq!(evaluate_loss(&out.params, &m, &val_w).unwrap(), out.history[0].val_loss);
}

fn split_windows() -> (WindowSet, WindowSet) {
    let s = wavy(300);
    (
        make_windows(&s[..220], 32, 8, 1).unwrap(),
        make_windows(&s[220..], 32, 8, 1).unwrap(),
    )
}

#[test]
fn identical_seeds_identical_runs() {
    let (tr, va) = split_windows();
    let t = TrainConfig {
        learning_rate: 1e-3,
        epochs: 5,
        seed: 7,
        ..TrainConfig::default()
    };
    let a = train(&small_model(7), &tr, &va, &t).unwrap();
    let b = train(&small_model(7), &tr, &va, &t).unwrap();
    assert_eq!(history_csv(&a.history), history_csv(&b.history));
    assert_eq!(a.params, b.params);
    let c = train(&small_model(7), &tr, &va, &TrainConfig { seed: 8, ..t }).unwrap();
    assert_ne!(a.history, c.history);
}

#[test]
fn best_checkpoint_is_minimum() {
    let (tr, va) = split_windows();
    for validation in [Validation::Epoch, Validation::Step] {
        let t = TrainConfig {
            learning_rate: 3e-3,
            epochs: 12,
            patience: 3,
            validation,
            ..TrainConfig::default()
        };
        let m = small_model(3);
        let out = train(&m, &tr, &va, &t).unwrap();
        for r in &out.history {
            assert!(out.best_val_loss <= r.val_loss);
        }
        assert_eq!(evaluate_loss(&out.params, &m, &va).unwrap(), out.best_val_loss);
        let epochs: Vec<usize> = out.history.iter().map(|r| r.epoch).collect();
        assert_eq!(epochs, (1..=epochs.len()).collect::<Vec<_>>());
    }
}

#[test]
fn nonfinite_loss_reports_batch() {
    let x = Series::new(wavy(32));
    let bad = WindowSet::from_pairs(vec![(x, Series::new(vec![1e200; 8]))]).unwrap();
    let err = train(&small_model(0), &bad, &bad, &TrainConfig::default()).unwrap_err();
    assert!(matches!(err, Error::NonFiniteLoss { batch: Some(0) }), "{err}");
    assert!(!err.is_validation());
}

#[test]
fn checkpoint_file_round_trip() {
    let (tr, va) = split_windows();
    let m = small_model(4);
    let t = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    let out = train(&m, &tr, &va, &t).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run/checkpoint.csv");
    Checkpoint::new(&m, &out.params, out.best_epoch, out.best_val_loss).save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.epoch, out.best_epoch);
    assert_eq!(back.val_loss, out.best_val_loss);
    // Another seed is the same architecture.
    let reloaded = back.into_params(&small_model(99)).unwrap();
    assert_eq!(reloaded, out.params);
}

#[test]
fn rejects_mismatched_windows() {
    let (tr, va) = split_windows();
    let m = ModelConfig {
        horizon: 4,
        ..small_model(0)
    };
    assert!(matches!(
        train(&m, &tr, &va, &TrainConfig::default()),
        Err(Error::ShapeMismatch { .. })
    ));
    assert!(train(&small_model(0), &WindowSet::default(), &va, &TrainConfig::default()).is_err());
}

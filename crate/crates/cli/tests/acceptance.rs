//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weits_core::data::{benchmark_spec, prepare, synthesize, Prepared};
use weits_core::ensemble::{ensemble_predict, train_ensemble, Aggregation, EnsembleConfig};
use weits_core::model::{forward_on_tape, infuse, model_forward, Mode, ModelConfig, ModelParams, ParamStore};
use weits_core::nn::{grad_check, Tape, Tensor};
use weits_core::training::{evaluate_loss, make_windows, train, TrainConfig};
use weits_core::wavelet::{haar_project, mdwd, WaveletKind};

const RECON_TOL: f64 = 1e-8;
const RECON_BUDGET: Duration = Duration::from_secs(5);
const APPROX_CORR_MIN: f64 = 0.95;
const DETAIL_CORR_MIN: f64 = 0.9;
const SEPARATION_BUDGET: Duration = Duration::from_secs(1);
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_EPS: f64 = 1e-5;
const GRAD_BUDGET: Duration = Duration::from_secs(30);
const HAAR_W1: f64 = 0.125;
const HAAR_W1_TOL: f64 = 1e-12;
const HAAR_W8_MAX: f64 = 2e-3;
const OVERFIT_MSE: f64 = 1e-3;
const OVERFIT_BUDGET: Duration = Duration::from_secs(60);
const ALPHA_WINS_MIN: usize = 8;
const ALPHA_BUDGET: Duration = Duration::from_secs(600);
const ENSEMBLE_WINS_MIN: usize = 7;
const REPS: u64 = 10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn random_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn reconstruction() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for kind in [WaveletKind::Haar, WaveletKind::Db2] {
        for _ in 0..100 {
            let x = random_series(&mut rng, 720);
            for levels in 1..=4 {
                worst = worst.max(mdwd(&x, levels, kind).unwrap().reconstruction_error());
            }
        }
    }
    let el = start.elapsed();
    verdict(
        worst <= RECON_TOL && el < RECON_BUDGET,
        format!("max error {worst:.2e} (tol {RECON_TOL:e}), {el:.2?}"),
    )
}

fn separation() -> Verdict {
    let start = Instant::now();
    let tau = std::f64::consts::TAU;
    let low: Vec<f64> = (0..512).map(|t| (tau * t as f64 / 64.0).sin()).collect();
    let high: Vec<f64> = (0..512).map(|t| (tau * t as f64 / 4.0).sin()).collect();
    let x: Vec<f64> = low.iter().zip(&high).map(|(a, b)| a + b).collect();
    let corr = |kind| {
        let p = mdwd(&x, 3, kind).unwrap();
        (pearson(p.approx(3).unwrap(), &low), pearson(p.detail(1).unwrap(), &high))
    };
    let (db_a, db_d) = corr(WaveletKind::Db2);
    let (haar_a, haar_d) = corr(WaveletKind::Haar);
    let el = start.elapsed();
    verdict(
        db_a > APPROX_CORR_MIN && db_d > DETAIL_CORR_MIN && el < SEPARATION_BUDGET,
        format!("db2 approx {db_a:.3} detail {db_d:.3}; haar approx {haar_a:.3} detail {haar_d:.3}; {el:.2?}"),
    )
}

fn gradients() -> Verdict {
    let start = Instant::now();
    let cfg = ModelConfig {
        n_stacks: 3,
        blocks_per_stack: 2,
        hidden_width: 8,
        lookback: 64,
        horizon: 8,
        dropout: 0.0,
        seed: 5,
        ..ModelConfig::default()
    };
    let mut params = ModelParams::init(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // Nonzero biases keep every ReLU away from its kink.
    for (name, t) in params.store().names().to_vec().iter().zip(params.store_mut().tensors_mut()) {
        if name.ends_with(".bias") {
            t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
    }
    let rows: Vec<Vec<f64>> = (0..3).map(|_| random_series(&mut rng, 64)).collect();
    let targets: Vec<Vec<f64>> = (0..3).map(|_| random_series(&mut rng, 8)).collect();
    let inputs = Tensor::from_rows(&rows).unwrap();
    let targets = Tensor::from_rows(&targets).unwrap();
    let names = params.store().names().to_vec();
    let f = |tape: &mut Tape, vars: &[weits_core::nn::Var]| {
        let mut store = ParamStore::new();
        for (n, v) in names.iter().zip(vars) {
            store.push(n.clone(), tape.value(*v).clone());
        }
        let p = ModelParams::from_store(&cfg, store)?;
        let fw = forward_on_tape(tape, &p, &cfg, &inputs, &mut Mode::inference())?;
        let y = tape.constant(targets.clone());
        tape.mse_loss(fw.global, y)
    };
    let report = grad_check(f, params.store().tensors(), GRAD_EPS).unwrap();
    let el = start.elapsed();
    let worst = report.worst.map(|(p, e)| format!("{}[{e}]", names[p])).unwrap_or_default();
    verdict(
        report.max_rel_error < GRAD_REL_TOL && el < GRAD_BUDGET,
        format!(
            "max rel error {:.2e} over {} parameters (worst {worst}), {el:.2?}",
            report.max_rel_error, report.checked
        ),
    )
}

fn alpha_zero_endpoint() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let infused = ModelConfig {
        alpha: 0.0,
        lookback: 96,
        seed: 12,
        ..ModelConfig::default()
    };
    let plain = ModelConfig {
        detach_wavelet: true,
        ..infused.clone()
    };
    let (pa, pb) = (ModelParams::init(&infused).unwrap(), ModelParams::init(&plain).unwrap());
    let mut identical = 0;
    for _ in 0..20 {
        let x = random_series(&mut rng, 96);
        let a = model_forward(&x, &pa, &infused).unwrap();
        let b = model_forward(&x, &pb, &plain).unwrap();
        let bits = |s: &[f64]| s.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        if bits(&a.global) == bits(&b.global) && a.per_stack_backcast == b.per_stack_backcast {
            identical += 1;
        }
    }
    verdict(identical == 20, format!("{identical}/20 inputs bit-identical"))
}

fn identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut good = 0;
    for i in 0..50u64 {
        let cfg = ModelConfig {
            n_stacks: rng.random_range(2..=4),
            blocks_per_stack: rng.random_range(1..=3),
            alpha: rng.random_range(0.0..=1.0),
            lookback: 64,
            horizon: 8,
            hidden_width: 8,
            seed: i,
            ..ModelConfig::default()
        };
        let p = ModelParams::init(&cfg).unwrap();
        let x = random_series(&mut rng, 64);
        let b = model_forward(&x, &p, &cfg).unwrap();
        let mut sum = b.per_stack_forecast[0].values().to_vec();
        for f in &b.per_stack_forecast[1..] {
            sum.iter_mut().zip(f.iter()).for_each(|(a, v)| *a += v);
        }
        let pyr = mdwd(&x, cfg.wavelet_levels(), cfg.wavelet).unwrap();
        let wiring = (0..cfg.n_stacks).all(|s| {
            let prev = (s > 0).then(|| (b.stack_inputs[s - 1].values(), b.per_stack_backcast[s - 1].values()));
            infuse(s + 1, &x, prev, &pyr, cfg.alpha).unwrap() == b.stack_inputs[s]
        });
        if b.global.values() == &sum[..] && wiring {
            good += 1;
        }
    }
    verdict(good == 50, format!("{good}/50 parameterizations exact"))
}

fn haar_oracle() -> Verdict {
    let n = 1 << 14;
    let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let errors: Vec<f64> = (0..=8).map(|w| haar_project(&x, w).unwrap().l1_error(&x)).collect();
    let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
    let w1 = errors[1];
    verdict(
        (w1 - HAAR_W1).abs() < HAAR_W1_TOL && monotone && errors[8] < HAAR_W8_MAX,
        format!("error(1) {w1:.6}, error(8) {:.2e}, nonincreasing {monotone}", errors[8]),
    )
}

fn overfit() -> Verdict {
    let start = Instant::now();
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
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let out = pool.install(|| train(&m, &w, &w, &t)).unwrap();
    let mse = evaluate_loss(&out.params, &m, &w).unwrap();
    let el = start.elapsed();
    verdict(
        mse < OVERFIT_MSE && el < OVERFIT_BUDGET,
        format!("train MSE {mse:.2e} (< {OVERFIT_MSE:e}) after {} epochs, {el:.2?}", t.epochs),
    )
}

fn benchmark(rep: u64) -> Prepared {
    let s = synthesize(&benchmark_spec(1500, 0.05, 100 + rep)).unwrap();
    prepare(&s, [0.7, 0.1, 0.2], 96, 24, 1).unwrap()
}

fn bench_model(alpha: f64, seed: u64) -> ModelConfig {
    ModelConfig {
        n_stacks: 3,
        blocks_per_stack: 2,
        lookback: 96,
        horizon: 24,
        alpha,
        seed,
        ..ModelConfig::default()
    }
}

fn bench_train(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-3,
        epochs: 30,
        batch_size: 32,
        seed,
        ..TrainConfig::default()
    }
}

fn alpha_direction() -> Verdict {
    let start = Instant::now();
    let mut wins = 0;
    let mut ratios = vec![];
    for rep in 0..REPS {
        let p = benchmark(rep);
        let mse = |alpha| {
            let m = bench_model(alpha, rep);
            let out = train(&m, &p.train, &p.val, &bench_train(rep)).unwrap();
            evaluate_loss(&out.params, &m, &p.test).unwrap()
        };
        let (zero, infused) = (mse(0.0), mse(0.4));
        if infused <= zero {
            wins += 1;
        }
        ratios.push(format!("{:.2}", infused / zero));
    }
    let el = start.elapsed();
    verdict(
        wins >= ALPHA_WINS_MIN && el < ALPHA_BUDGET,
        format!("alpha 0.4 <= alpha 0 in {wins}/{REPS} (ratios {}), {el:.2?}", ratios.join(" ")),
    )
}

fn ensemble_trend() -> Verdict {
    let start = Instant::now();
    let mut wins = 0;
    for rep in 0..REPS {
        let p = benchmark(rep);
        let m = bench_model(0.4, 0);
        let ens = EnsembleConfig {
            size: 5,
            base_seed: 1000 * rep,
            ..EnsembleConfig::default()
        };
        let members = train_ensemble(&m, &bench_train(0), &ens, &p.train, &p.val, None).unwrap();
        let mut singles: Vec<f64> = members
            .iter()
            .map(|mb| evaluate_loss(&mb.outcome.params, &m, &p.test).unwrap())
            .collect();
        singles.sort_by(f64::total_cmp);
        let params: Vec<ModelParams> = members.into_iter().map(|mb| mb.outcome.params).collect();
        let windows: Vec<&[f64]> = p.test.inputs().iter().map(|s| s.values()).collect();
        let forecasts = ensemble_predict(&windows, &params, &m, Aggregation::Median).unwrap();
        let (mut se, mut count) = (0.0, 0.0);
        for (f, t) in forecasts.iter().zip(p.test.targets()) {
            for (a, b) in f.aggregated.iter().zip(t.iter()) {
                se += (a - b) * (a - b);
                count += 1.0;
            }
        }
        if se / count <= singles[2] {
            wins += 1;
        }
    }
    verdict(
        wins >= ENSEMBLE_WINS_MIN,
        format!("median ensemble <= median member in {wins}/{REPS}, {:.2?}", start.elapsed()),
    )
}

const CLI_CONFIG: &str = r#"
spec_version = 1

[data]
benchmark = { length = 600, noise = 0.05, seed = 9 }

[model]
n_stacks = 3
blocks_per_stack = 1
lookback = 32
horizon = 8
hidden_width = 8

[train]
learning_rate = 0.001
epochs = 3
batch_size = 32

[ensemble]
size = 2

[ablate]
repetitions = 2
alpha = [0.0, 0.4]
"#;

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Verdict {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    fs::write(&cfg, CLI_CONFIG).unwrap();
    let commands: [&[&str]; 5] = [
        &["decompose"],
        &["train"],
        &["forecast"],
        &["eval", "--baseline"],
        &["ablate", "--axis", "alpha"],
    ];
    let mut runs = vec![];
    for (name, jobs) in [("a", "4"), ("b", "1")] {
        let out = d.path().join(name);
        for args in commands {
            let o = Command::new(env!("CARGO_BIN_EXE_weits"))
                .arg("--config")
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .args(["--jobs", jobs])
                .args(args)
                .output()
                .unwrap();
            if !o.status.success() {
                return verdict(
                    false,
                    format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&o.stderr)),
                );
            }
        }
        runs.push(tree(&out));
    }
    let differing: Vec<String> = runs[0]
        .iter()
        .filter(|(k, v)| runs[1].get(*k) != Some(v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    let same_set = runs[0].len() == runs[1].len();
    verdict(
        differing.is_empty() && same_set,
        format!("{} files compared across 5 commands, {} differ {:?}", runs[0].len(), differing.len(), differing),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("perfect reconstruction", reconstruction),
        ("frequency separation", separation),
        ("gradient correctness", gradients),
        ("alpha = 0 matches detached model", alpha_zero_endpoint),
        ("summation and residual identities", identities),
        ("haar projection oracle", haar_oracle),
        ("overfit one window", overfit),
        ("alpha direction", alpha_direction),
        ("ensemble trend", ensemble_trend),
        ("cli determinism", determinism),
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|n| n != i + 1) {
            continue;
        }
        let v = run();
        if !v.pass {
            failed += 1;
        }
        println!("{} criterion {} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

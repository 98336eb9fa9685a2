use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use weits_core::data::{multiplicative_noise, prepare, Prepared};
use weits_core::ensemble::{
    aggregate, member_checkpoint_path, save_members, train_ensemble, EnsembleConfig,
};
use weits_core::model::{model_forward, predict, ConvVariant, ForecastBundle, ModelConfig, ModelParams, PerStack};
use weits_core::training::{history_csv, horizon_metrics, mae, mse, persistence_forecast, train, Checkpoint, WindowSet};
use weits_core::wavelet::{mdwd_with_boundary, Branch};
use weits_core::Series;

use crate::config::RunConfig;
use crate::data::load_series;
use crate::error::CliError;
use crate::output::Out;

pub struct Context {
    pub cfg: RunConfig,
    pub out: Out,
    pub jobs: Option<usize>,
}

impl Context {
    fn prepared(&self) -> Result<Prepared, CliError> {
        let raw = load_series(&self.cfg)?;
        prepare_series(&self.cfg, &raw.values)
    }
}

fn prepare_series(cfg: &RunConfig, raw: &[f64]) -> Result<Prepared, CliError> {
    Ok(prepare(
        raw,
        cfg.data.fractions,
        cfg.model.lookback,
        cfg.model.horizon,
        cfg.train.stride,
    )?)
}

pub fn decompose(ctx: &Context) -> Result<(), CliError> {
    let series = load_series(&ctx.cfg)?.values;
    let d = &ctx.cfg.decompose;
    let levels = d.levels.unwrap_or(ctx.cfg.model.wavelet_levels());
    let kind = d.wavelet.unwrap_or(ctx.cfg.model.wavelet);
    let boundary = d.boundary.unwrap_or(ctx.cfg.model.boundary);
    let pyramid = mdwd_with_boundary(&series, levels, kind, boundary)?;
    for l in 1..=levels {
        for (b, name) in [(Branch::Approx, "approx"), (Branch::Detail, "detail")] {
            ctx.out.series(format!("series.L{l}.{name}.csv"), pyramid.branch(l, b)?)?;
        }
    }
    let err = pyramid.reconstruction_error();
    ctx.out.write("recon_error.txt", &format!("{err:e}\n"))?;
    println!("decomposed {} samples into {levels} levels ({}); reconstruction error {err:e}", series.len(), kind.name());
    Ok(())
}

fn set_metrics(preds: &[Series], set: &WindowSet) -> Result<(f64, f64), CliError> {
    let p: Vec<f64> = preds.iter().flat_map(|s| s.iter().copied()).collect();
    let t: Vec<f64> = set.targets().iter().flat_map(|s| s.iter().copied()).collect();
    Ok((mse(&p, &t)?, mae(&p, &t)?))
}

fn inputs(set: &WindowSet) -> Vec<&[f64]> {
    set.inputs().iter().map(|s| s.values()).collect()
}

/// Forecasts of every model, combined with the ensemble aggregation when there are several.
fn combined_predict(models: &[(u64, ModelParams)], cfg: &RunConfig, set: &WindowSet) -> Result<Vec<Series>, CliError> {
    let windows = inputs(set);
    let per: Vec<Vec<Series>> = models
        .iter()
        .map(|(_, p)| predict(&windows, p, &cfg.model))
        .collect::<Result<_, _>>()?;
    if per.len() == 1 {
        return Ok(per.into_iter().next().unwrap());
    }
    let method = cfg.ensemble.as_ref().map(|e| e.aggregation).unwrap_or_default();
    (0..windows.len())
        .map(|w| {
            let members: Vec<&Series> = per.iter().map(|m| &m[w]).collect();
            Ok(aggregate(&members, method)?)
        })
        .collect()
}

pub fn train_cmd(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let p = ctx.prepared()?;
    let models: Vec<(u64, ModelParams)> = match &cfg.ensemble {
        None => {
            let outcome = train(&cfg.model, &p.train, &p.val, &cfg.train)?;
            Checkpoint::new(&cfg.model, &outcome.params, outcome.best_epoch, outcome.best_val_loss)
                .save(&ctx.out.path("checkpoint.csv"))?;
            ctx.out.write("history.csv", &history_csv(&outcome.history))?;
            println!(
                "trained {} epochs, best validation loss {} at epoch {}",
                outcome.history.len(),
                outcome.best_val_loss,
                outcome.best_epoch
            );
            vec![(cfg.model.seed, outcome.params)]
        }
        Some(ens) => {
            let members = train_ensemble(&cfg.model, &cfg.train, ens, &p.train, &p.val, ctx.jobs)?;
            save_members(ctx.out.dir(), &members, &cfg.model)?;
            for m in &members {
                ctx.out
                    .sub("ensemble")
                    .sub(m.seed.to_string())
                    .write("history.csv", &history_csv(&m.outcome.history))?;
                println!(
                    "member {}: best validation loss {} at epoch {}",
                    m.seed, m.outcome.best_val_loss, m.outcome.best_epoch
                );
            }
            members.into_iter().map(|m| (m.seed, m.outcome.params)).collect()
        }
    };
    for (name, set) in [("train", &p.train), ("validation", &p.val)] {
        let (m, a) = set_metrics(&combined_predict(&models, cfg, set)?, set)?;
        println!("{name}: mse {m} mae {a}");
    }
    Ok(())
}

fn load_models(ctx: &Context, checkpoint: Option<&Path>) -> Result<Vec<(u64, ModelParams)>, CliError> {
    let cfg = &ctx.cfg;
    match &cfg.ensemble {
        None => {
            let path = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.path("checkpoint.csv"));
            Ok(vec![(cfg.model.seed, Checkpoint::load(&path)?.into_params(&cfg.model)?)])
        }
        Some(ens) => {
            let dir: PathBuf = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.dir().to_path_buf());
            ens.member_seeds()
                .into_iter()
                .map(|seed| {
                    let ck = Checkpoint::load(&member_checkpoint_path(&dir, seed))?;
                    let model = ModelConfig {
                        seed,
                        ..cfg.model.clone()
                    };
                    Ok((seed, ck.into_params(&model)?))
                })
                .collect()
        }
    }
}

fn write_bundle(out: &Out, bundle: &ForecastBundle, window: &[f64], cfg: &ModelConfig) -> Result<(), CliError> {
    out.forecast("global.csv", &bundle.global)?;
    for (i, f) in bundle.per_stack_forecast.iter().enumerate() {
        let s = i + 1;
        out.forecast(format!("stack{s}.forecast.csv"), f)?;
        out.series(format!("stack{s}.backcast.csv"), &bundle.per_stack_backcast[i])?;
        out.series(format!("stack{s}.infused.csv"), &bundle.stack_inputs[i])?;
        if let Some(w) = bundle.infused_signals.get(i) {
            out.series(format!("stack{s}.wavelet.csv"), w)?;
        }
    }
    if cfg.uses_wavelet() {
        let pyramid = mdwd_with_boundary(window, cfg.wavelet_levels(), cfg.wavelet, cfg.boundary)?;
        for l in 1..=pyramid.levels() {
            out.series(format!("pyramid.L{l}.approx.csv"), pyramid.approx(l)?)?;
            out.series(format!("pyramid.L{l}.detail.csv"), pyramid.detail(l)?)?;
        }
    }
    Ok(())
}

pub fn forecast(ctx: &Context, checkpoint: Option<&Path>) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let p = ctx.prepared()?;
    let t = cfg.model.lookback;
    let n = p.scaled.len();
    let start = cfg.forecast.start.unwrap_or(n - t);
    if start + t > n {
        return Err(CliError::Config(format!(
            "forecast.start {start} plus lookback {t} exceeds the series length {n}"
        )));
    }
    let window = &p.scaled[start..start + t];
    let models = load_models(ctx, checkpoint)?;
    let mut globals = Vec::with_capacity(models.len());
    for (seed, params) in &models {
        let bundle = model_forward(window, params, &cfg.model)?;
        let out = match cfg.ensemble {
            None => ctx.out.sub(""),
            Some(_) => ctx.out.sub("ensemble").sub(seed.to_string()),
        };
        write_bundle(&out, &bundle, window, &cfg.model)?;
        out.forecast("forecast.csv", &p.scaler.invert(&bundle.global))?;
        globals.push(bundle.global);
    }
    if let Some(ens) = &cfg.ensemble {
        let agg = aggregate(&globals, ens.aggregation)?;
        let original = p.scaler.invert(&agg);
        let mut s = String::from("h");
        for (seed, _) in &models {
            let _ = write!(s, ",member_{seed}");
        }
        s.push_str(",aggregated,aggregated_original\n");
        for h in 0..agg.len() {
            let _ = write!(s, "{}", h + 1);
            for g in &globals {
                let _ = write!(s, ",{}", g[h]);
            }
            let _ = writeln!(s, ",{},{}", agg[h], original[h]);
        }
        ctx.out.write("ensemble.forecast.csv", &s)?;
    }
    println!("forecast {} steps from window [{start}, {})", cfg.model.horizon, start + t);
    Ok(())
}

fn metric_rows(s: &mut String, model: &str, scale: &str, preds: &[Series], targets: &[Series]) -> Result<f64, CliError> {
    let m = horizon_metrics(preds, targets)?;
    for h in 0..m.mse.len() {
        let _ = writeln!(s, "{model},{scale},{},{},{}", h + 1, m.mse[h], m.mae[h]);
    }
    let _ = writeln!(s, "{model},{scale},all,{},{}", m.overall_mse(), m.overall_mae());
    Ok(m.overall_mse())
}

pub fn eval(ctx: &Context, checkpoint: Option<&Path>, baseline: bool) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let p = ctx.prepared()?;
    let models = load_models(ctx, checkpoint)?;
    let preds = combined_predict(&models, cfg, &p.test)?;
    let targets = p.test.targets();
    let invert = |v: &[Series]| -> Vec<Series> { v.iter().map(|s| p.scaler.invert(s)).collect() };

    let mut s = String::from("model,scale,horizon,mse,mae\n");
    let std_mse = metric_rows(&mut s, "weits", "standardized", &preds, targets)?;
    let orig_mse = metric_rows(&mut s, "weits", "original", &invert(&preds), &invert(targets))?;
    println!("test mse {std_mse} (standardized), {orig_mse} (original scale)");
    if baseline {
        let base: Vec<Series> = p
            .test
            .inputs()
            .iter()
            .map(|x| Series::new(persistence_forecast(x, cfg.model.horizon)))
            .collect();
        let b = metric_rows(&mut s, "persistence", "standardized", &base, targets)?;
        metric_rows(&mut s, "persistence", "original", &invert(&base), &invert(targets))?;
        println!("persistence test mse {b} (standardized)");
    }
    ctx.out.write("metrics.csv", &s)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Alpha,
    Stacks,
    Conv,
    EnsembleSize,
    Noise,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Alpha => "alpha",
            Axis::Stacks => "stacks",
            Axis::Conv => "conv",
            Axis::EnsembleSize => "ensemble_size",
            Axis::Noise => "noise",
        }
    }
}

struct Cell {
    label: String,
    cfg: RunConfig,
    noise: Option<f64>,
}

fn ablation_cells(base: &RunConfig, axis: Axis) -> Vec<Cell> {
    let a = &base.ablate;
    let cell = |label: String, f: &dyn Fn(&mut RunConfig), noise| {
        let mut cfg = base.clone();
        f(&mut cfg);
        Cell { label, cfg, noise }
    };
    match axis {
        Axis::Alpha => a
            .alpha
            .iter()
            .map(|&v| cell(v.to_string(), &|c| c.model.alpha = v, None))
            .collect(),
        Axis::Noise => a.noise.iter().map(|&v| cell(v.to_string(), &|_| {}, Some(v))).collect(),
        Axis::Stacks => a
            .stacks
            .iter()
            .map(|&n| {
                cell(
                    n.to_string(),
                    &|c| {
                        c.model.n_stacks = n;
                        if c.model.kernel_sizes.as_ref().is_some_and(|k| k.len() != n) {
                            c.model.kernel_sizes = None;
                        }
                        if let PerStack::Each(v) = &c.model.conv_variant {
                            if v.len() != n {
                                c.model.conv_variant = PerStack::All(v[0]);
                            }
                        }
                    },
                    None,
                )
            })
            .collect(),
        Axis::Conv => a
            .conv
            .iter()
            .map(|&v: &ConvVariant| cell(v.name().to_string(), &|c| c.model.conv_variant = PerStack::All(v), None))
            .collect(),
        Axis::EnsembleSize => a
            .ensemble_size
            .iter()
            .map(|&m| {
                cell(
                    m.to_string(),
                    &|c| {
                        let e = c.ensemble.get_or_insert_with(EnsembleConfig::default);
                        e.size = m;
                        e.seeds = None;
                    },
                    None,
                )
            })
            .collect(),
    }
}

/// Test-set MSE and MAE on the standardized scale for one seeded run of a cell.
fn ablation_run(cell: &Cell, raw: &[f64], rep: usize) -> Result<(u64, f64, f64), CliError> {
    let mut cfg = cell.cfg.clone();
    let seed = cfg.model.seed.wrapping_add(rep as u64);
    cfg.set_seed(seed);
    cfg.validate()?;
    let series = match cell.noise {
        Some(level) => multiplicative_noise(raw, level, seed)?.into_inner(),
        None => raw.to_vec(),
    };
    let p = prepare_series(&cfg, &series)?;
    let models: Vec<(u64, ModelParams)> = match &cfg.ensemble {
        None => vec![(seed, train(&cfg.model, &p.train, &p.val, &cfg.train)?.params)],
        Some(ens) => train_ensemble(&cfg.model, &cfg.train, ens, &p.train, &p.val, Some(1))?
            .into_iter()
            .map(|m| (m.seed, m.outcome.params))
            .collect(),
    };
    let (m, a) = set_metrics(&combined_predict(&models, &cfg, &p.test)?, &p.test)?;
    Ok((seed, m, a))
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

pub fn ablate(ctx: &Context, axis: Axis) -> Result<(), CliError> {
    let raw = load_series(&ctx.cfg)?.values;
    let cells = ablation_cells(&ctx.cfg, axis);
    let reps = ctx.cfg.ablate.repetitions;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<(u64, f64, f64), CliError>> =
        pool.install(|| jobs.par_iter().map(|&(c, r)| ablation_run(&cells[c], &raw, r)).collect());

    let name = axis.name();
    let mut summary = String::from("axis,value,runs,failed,test_mse_mean,test_mse_std,test_mae_mean,test_mae_std\n");
    let mut runs = String::from("axis,value,repetition,seed,status,test_mse,test_mae\n");
    for (c, cell) in cells.iter().enumerate() {
        let mut mses = Vec::new();
        let mut maes = Vec::new();
        for r in 0..reps {
            match &results[c * reps + r] {
                Ok((seed, m, a)) => {
                    mses.push(*m);
                    maes.push(*a);
                    let _ = writeln!(runs, "{name},{},{r},{seed},ok,{m},{a}", cell.label);
                }
                Err(e) => {
                    eprintln!("{name}={} repetition {r} failed: {e}", cell.label);
                    let _ = writeln!(runs, "{name},{},{r},,failed,,", cell.label);
                }
            }
        }
        let (mm, ms) = mean_std(&mses);
        let (am, as_) = mean_std(&maes);
        let _ = writeln!(
            summary,
            "{name},{},{reps},{},{mm},{ms},{am},{as_}",
            cell.label,
            reps - mses.len()
        );
        println!("{name}={}: test mse {mm} +- {ms} ({} of {reps} runs)", cell.label, mses.len());
    }
    ctx.out.write(format!("ablation_{name}.csv"), &summary)?;
    ctx.out.write(format!("ablation_{name}.runs.csv"), &runs)?;
    Ok(())
}

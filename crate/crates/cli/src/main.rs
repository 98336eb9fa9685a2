//! `weits`: decompose, train, forecast, evaluate and ablate wavelet-infused forecasters.

mod commands;
mod config;
mod data;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Axis, Context};
use config::RunConfig;
use error::CliError;
use output::Out;

#[derive(Parser)]
#[command(name = "weits", version, about = "Wavelet-infused doubly-residual time series forecasting")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "weits.toml")]
    config: PathBuf,
    /// Overrides the model, training and ensemble seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for ensemble members and ablation runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the wavelet pyramid of the configured series.
    Decompose,
    /// Train a model (or an ensemble) and write its checkpoint and history.
    Train,
    /// Write the per-stack forecast bundle for one input window.
    Forecast {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Test-set metrics per horizon step.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Also report the last-value persistence forecast.
        #[arg(long)]
        baseline: bool,
    },
    /// Run a seeded grid over one axis.
    Ablate {
        #[arg(long, value_enum)]
        axis: Axis,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    cfg.validate()?;
    if cli.jobs == Some(0) {
        return Err(CliError::Config("--jobs must be >= 1".into()));
    }
    let out = Out::new(&cli.out);
    out.write("resolved_config.toml", &cfg.to_toml())?;
    let ctx = Context {
        cfg,
        out,
        jobs: cli.jobs,
    };
    match &cli.command {
        Command::Decompose => commands::decompose(&ctx),
        Command::Train => commands::train_cmd(&ctx),
        Command::Forecast { checkpoint } => commands::forecast(&ctx, checkpoint.as_deref()),
        Command::Eval { checkpoint, baseline } => commands::eval(&ctx, checkpoint.as_deref(), *baseline),
        Command::Ablate { axis } => commands::ablate(&ctx, *axis),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

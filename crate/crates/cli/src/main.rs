//! `pta-bench`: run reservoir benchmark experiments and export datasets.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pta_core::experiment::THREADS_ENV;
use pta_core::output::emit_outputs;
use pta_core::{rng, run_experiment, tasks, ModelKind, TaskKind};

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(
    name = "pta-bench",
    version,
    about = "Reservoir computing benchmark runner"
)]
#[command(after_help = concat!(
    "Repetitions run in parallel; set ", "PTA_THREADS", " to bound the number of worker threads."
))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write summary, trace and comparison files.
    Run(RunArgs),
    /// Write a generated dataset as a delimited file.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    model: Option<ModelKind>,
    /// Number of reservoir units.
    #[arg(long)]
    units: Option<usize>,
    #[arg(long)]
    input_scaling: Option<f64>,
    /// Initial PTA gain.
    #[arg(long)]
    rho: Option<f64>,
    /// Ridge regularization.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Base seed; repetition i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum PTA epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    /// Random-search budget for ESN/SCR (calibrated against PTA when omitted).
    #[arg(long)]
    budget: Option<usize>,
    /// Series length (default 20000).
    #[arg(long)]
    length: Option<usize>,
    /// PTA training washout.
    #[arg(long)]
    washout: Option<usize>,
    /// `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    task: TaskKind,
    #[arg(long, default_value_t = tasks::DEFAULT_LENGTH)]
    length: usize,
    /// Reservoir size; sets the number of MC delay channels (2N).
    #[arg(long, default_value_t = 100)]
    units: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            task: self.task,
            model: self.model,
            units: self.units,
            input_scaling: self.input_scaling,
            rho: self.rho,
            kappa: self.kappa,
            repetitions: self.repetitions,
            seed: self.seed,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            budget: self.budget,
            length: self.length,
            washout: self.washout,
            out: self.out.clone(),
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let base = match &args.config {
        Some(path) => Overrides::from_file(path)?,
        None => Overrides::default(),
    };
    let merged = base.layered(args.overrides());
    let out_dir = merged
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results"));
    let cfg = merged
        .into_config()
        .context("building experiment configuration")?;
    log::info!(
        "running {} on {} ({} repetitions, {} threads via {THREADS_ENV})",
        cfg.model,
        cfg.task,
        cfg.repetitions,
        std::env::var(THREADS_ENV).unwrap_or_else(|_| "default".into())
    );
    let result = run_experiment(&cfg)?;
    let files = emit_outputs(&result, &out_dir)?;
    println!(
        "{} {} {}: mean {:.6e} std {:.6e} over {} repetitions{}",
        result.task,
        result.model,
        result.metric,
        result.mean,
        result.std,
        result.runs.len(),
        result
            .search_budget
            .map(|b| format!(" (search budget {b})"))
            .unwrap_or_default()
    );
    println!("summary: {}", files.summary.display());
    if let Some(t) = &files.trace {
        println!("trace: {}", t.display());
    }
    println!("comparison: {}", files.comparison.display());
    if !result.complete {
        anyhow::bail!(
            "{} of {} repetitions failed; first: {}",
            result.failures.len(),
            cfg.repetitions,
            result.failures[0].message
        );
    }
    Ok(())
}

fn export(args: ExportArgs) -> Result<()> {
    let mut rng = rng::seeded_stream(args.seed, rng::stream::DATASET);
    let ds = tasks::generate(args.task, args.length, args.units, &mut rng)?;
    ds.write_csv(&args.out)?;
    println!("wrote {} rows to {}", ds.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Export(args) => export(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

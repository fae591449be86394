//! `adaptsig`: optimize signal plans, simulate controllers, run the camera pipeline.

mod commands;
mod exit;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;

use adaptsig_core::pipeline::StopSignal;
use adaptsig_core::SelectionPolicy;
use clap::{Args, Parser, Subcommand};

use crate::exit::CliError;

#[derive(Debug, Parser)]
#[command(name = "adaptsig", version, about = "Adaptive traffic-signal scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize one cycle for a queue snapshot and pick an operating point.
    Optimize(OptimizeArgs),
    /// Simulate the controllers of a scenario.
    Simulate(SimulateArgs),
    /// Run the camera-to-plan pipeline.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Intersection config, optionally with `optimizer` and `policy` keys.
    #[arg(long)]
    pub config: PathBuf,
    /// Queue snapshot JSON.
    #[arg(long)]
    pub queue: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// knee, min_f1, min_f2, weighted or weighted:W1,W2
    #[arg(long)]
    pub policy: Option<SelectionPolicy>,
    #[arg(long, default_value = "out/optimize")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Seed for the single runs; the scenario's first seed by default.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also compare all controllers over every scenario seed.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, default_value = "out/simulate")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Stop after this many plans; runs until interrupted or sources end otherwise.
    #[arg(long)]
    pub cycles: Option<u64>,
    /// Write a latency summary table.
    #[arg(long)]
    pub report: bool,
    /// Overrides the optimizer seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out/pipeline")]
    pub out: PathBuf,
}

/// Stop handle of a running pipeline, if any. Ctrl-C stops it gracefully;
/// other commands exit immediately.
static PIPELINE_STOP: OnceLock<StopSignal> = OnceLock::new();

fn install_interrupt_handler() {
    let result = ctrlc::set_handler(|| match PIPELINE_STOP.get() {
        Some(stop) => stop.stop(),
        None => std::process::exit(exit::ExitKind::Interrupted as i32),
    });
    if let Err(e) = result {
        log::warn!("cannot install interrupt handler: {e}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    install_interrupt_handler();
    let result: Result<(), CliError> = match cli.command {
        Command::Optimize(args) => commands::optimize::run(&args),
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::Pipeline(args) => commands::pipeline::run(&args, &PIPELINE_STOP),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}

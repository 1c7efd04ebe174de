//! `ipstab` command-line front end.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Output, SimOverrides};
use crate::config::{IntegratorChoice, RunConfig};
use crate::error::CliError;
use crate::output::Sink;

#[derive(Parser, Debug)]
#[command(
    name = "ipstab",
    version,
    about = "Stability analysis and simulation of iP control loops"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-loop classification and stability verdict.
    Analyze(Common),
    /// Simulate the loop and fit a decay envelope.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Neutral root chain and rectangle root counts.
    Roots(Common),
    /// Grid search for certified gains.
    Tune(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report files; stdout only when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimFlags {
    #[arg(long, value_enum)]
    force_integrator: Option<IntegratorChoice>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let (name, common) = match &cli.command {
        Command::Analyze(c) => ("analyze", c),
        Command::Simulate { common, .. } => ("simulate", common),
        Command::Roots(c) => ("roots", c),
        Command::Tune(c) => ("tune", c),
    };
    let cfg = RunConfig::load(&common.config)?;
    let out: Output = match &cli.command {
        Command::Analyze(_) => commands::analyze(&cfg)?,
        Command::Simulate { sim, .. } => commands::simulate(
            &cfg,
            &SimOverrides {
                integrator: sim.force_integrator,
                step: sim.step,
                horizon: sim.horizon,
            },
        )?,
        Command::Roots(_) => commands::roots(&cfg)?,
        Command::Tune(_) => commands::tune_cmd(&cfg)?,
    };
    let mut sink = Sink::new(common.out.clone().or_else(|| cfg.output_dir.clone()))?;
    for (file, bytes) in &out.files {
        sink.put(file, bytes)?;
    }
    sink.put(out.name, out.json.as_bytes())?;
    print!("{}", out.json);
    sink.finish(name, &common.config, start.elapsed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ipstab: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `otto`: thermal states, adiabatic strokes, Otto cycles and efficiency
//! scans for the transverse-field Ising and easy-axis XXZ chains.
//!
//! Exit codes: 0 on success, 1 on solver or I/O failure, 2 on configuration
//! errors.

mod commands;
mod config;
mod output;
mod selftest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<otto_core::Error> for CliError {
    fn from(e: otto_core::Error) -> Self {
        if e.is_invalid_input() {
            CliError::Config(e.to_string())
        } else {
            CliError::Solver(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "otto",
    version,
    about = "Thermal and prethermal Otto cycles in integrable spin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    config: PathBuf,
    /// Override a configuration key, e.g. `--set numerics.cells=800`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; takes precedence over OTTO_OUTPUT_DIR and the file.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a thermal state and write its filling and observables.
    ThermalState(RunArgs),
    /// Run one thermal or prethermal adiabatic stroke.
    Stroke(RunArgs),
    /// Run a full Otto cycle with the selected working media.
    Cycle(RunArgs),
    /// Scan infinitesimal-cycle efficiencies over temperature and control.
    Scan {
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the built-in oracle checks.
    Selftest,
}

fn load(args: &RunArgs) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = RunConfig::load(&args.config, &args.overrides)?;
    let dir = cfg.output_dir(args.output_dir.as_deref());
    Ok((cfg, dir))
}

fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    match cli.command {
        Command::ThermalState(a) => {
            let (cfg, dir) = load(&a)?;
            commands::thermal_state(&cfg, &dir)
        }
        Command::Stroke(a) => {
            let (cfg, dir) = load(&a)?;
            commands::stroke(&cfg, &dir)
        }
        Command::Cycle(a) => {
            let (cfg, dir) = load(&a)?;
            commands::cycle(&cfg, &dir)
        }
        Command::Scan { run, workers } => {
            let (cfg, dir) = load(&run)?;
            let workers = match workers {
                Some(0) => return Err(CliError::Config("--workers must be positive".into())),
                Some(n) => n,
                None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            };
            commands::scan(&cfg, &dir, workers)
        }
        Command::Selftest => {
            if selftest::run() {
                Ok(Vec::new())
            } else {
                Err(CliError::Solver("selftest failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("otto: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

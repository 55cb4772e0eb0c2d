//! `qfb`: steady states, sweeps, trajectory ensembles, Q-function grids and
//! validation reports for the two-atom feedback model.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<qfb::Error> for CliError {
    fn from(e: qfb::Error) -> Self {
        match e {
            qfb::Error::InvalidParameter(_) | qfb::Error::BasisMismatch(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qfb", version, about = "Two-atom homodyne feedback simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    /// May be omitted when the config file sets `command`.
    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Flags shared by every command. Physical quantities are in units of γ.
#[derive(Debug, Args, Default)]
pub struct Common {
    /// Driving amplitude [default: 0.4]
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Feedback amplitude [default: -0.8]
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Collective decay rate [default: 1]
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Detection efficiency [default: 1]
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Base RNG seed [default: 1]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// key = value file; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads, 0 for all cores [default: 0]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady state of the feedback master equation
    Steady(commands::SteadyArgs),
    /// Concurrence and purity over an (alpha, lambda) grid
    Sweep(commands::SweepArgs),
    /// Conditioned trajectories and their ensemble mean
    Traj(commands::TrajArgs),
    /// Spin Q function on a (theta, phi) grid
    Qfunc(commands::QfuncArgs),
    /// Bloch-equation consistency and adiabatic-elimination reports
    Validate(commands::ValidateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Steady(_) => "steady",
            Command::Sweep(_) => "sweep",
            Command::Traj(_) => "traj",
            Command::Qfunc(_) => "qfunc",
            Command::Validate(_) => "validate",
        }
    }

    fn from_name(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "steady" => Command::Steady(Default::default()),
            "sweep" => Command::Sweep(Default::default()),
            "traj" => Command::Traj(Default::default()),
            "qfunc" => Command::Qfunc(Default::default()),
            "validate" => Command::Validate(Default::default()),
            other => return Err(CliError::Usage(format!("unknown command '{other}'"))),
        })
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut res = config::Resolver::new(cli.common.config.as_deref())?;
    let from_file = res.file_value("command").map(str::to_string);
    let command = match (cli.command, from_file) {
        (Some(c), Some(f)) if c.name() != f => {
            return Err(CliError::Usage(format!(
                "config file is for '{f}', command line asks for '{}'",
                c.name()
            )))
        }
        (Some(c), _) => c,
        (None, Some(f)) => Command::from_name(&f)?,
        (None, None) => {
            return Err(CliError::Usage(
                "no command given (steady, sweep, traj, qfunc or validate)".into(),
            ))
        }
    };
    res.record("command", command.name());
    let jobs: usize = res.get("jobs", cli.common.jobs, Some(0))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| commands::dispatch(command, &cli.common, res))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `bfamily`: run the b-family solvers, diagnostics and experiments from TOML
//! configuration files and write CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 blow-up or other
//! numerical failure, 3 an acceptance check failed.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod sweep;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use bfamily::Error;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bfamily",
    version,
    about = "Solvers and experiments for the b-family of equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for concurrent trajectories and sweep cells.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Acceptance tolerance; the default depends on the command.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Formulation used by `solve`.
    #[arg(long, global = true, value_enum, default_value_t = FormulationArg::Eulerian)]
    formulation: FormulationArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and store its snapshots.
    Solve,
    /// Integrate the geodesic and check momentum transport (`--tol`, default 1e-4).
    Conserve,
    /// Run the non-uniform-continuity experiment (`--tol` is the persistence fraction, default 0.1).
    Nonuniform,
    /// Run another command over the cartesian product of `b` and `N` values.
    Sweep,
    /// Evaluate the exponential map at the initial datum.
    Exp,
    /// Check the scaling law `v(t) = lambda u(lambda t)` (`--tol`, default 1e-6).
    Scalecheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Conserve => "conserve",
            Command::Nonuniform => "nonuniform",
            Command::Sweep => "sweep",
            Command::Exp => "exp",
            Command::Scalecheck => "scalecheck",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Command::Solve,
            Command::Conserve,
            Command::Nonuniform,
            Command::Sweep,
            Command::Exp,
            Command::Scalecheck,
        ]
        .into_iter()
        .find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    Eulerian,
    Lagrangian,
}

impl FormulationArg {
    pub fn name(self) -> &'static str {
        match self {
            FormulationArg::Eulerian => "eulerian",
            FormulationArg::Lagrangian => "lagrangian",
        }
    }
}

/// Flags shared by every command, after defaults are resolved.
#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub tol: Option<f64>,
    pub formulation: FormulationArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Ok = 0,
    Config = 1,
    Numerical = 2,
    Acceptance = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Self {
        match code {
            0 => Exit::Ok,
            1 => Exit::Config,
            2 => Exit::Numerical,
            _ => Exit::Acceptance,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            exit: Exit::Config,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let exit = match &err {
            Error::NotMonotone { .. }
            | Error::PositivityMargin { .. }
            | Error::InversionFailed { .. }
            | Error::ConjugateSolveStalled { .. }
            | Error::NanDetected { .. }
            | Error::OutsideExpDomain { .. }
            | Error::Blowup { .. } => Exit::Numerical,
            _ => Exit::Config,
        };
        Self {
            exit,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::config(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(Exit::Config.code());
        }
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let Some(config_path) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(Exit::Config.code());
    };
    let opts = Options {
        tol: cli.tol,
        formulation: cli.formulation,
    };
    let result = config::load(config_path).and_then(|loaded| {
        let out = match (&cli.out, &loaded.config.output) {
            (Some(out), _) => out.clone(),
            (None, Some(out)) => loaded.base_dir.join(out),
            (None, None) => {
                return Err(CliError::config(
                    "no output directory: pass --out or set `output`",
                ))
            }
        };
        match cli.command {
            Command::Sweep => sweep::run(&loaded, &out, opts),
            command => commands::run(command, &loaded, &out, opts),
        }
    });
    match result {
        Ok(exit) => ExitCode::from(exit.code()),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit.code())
        }
    }
}

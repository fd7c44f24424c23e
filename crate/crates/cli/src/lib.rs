//! Command-line front end for `epicampaign-core`.
//!
//! Loads JSON scenario files, dispatches the solvers and the simulator, and
//! writes CSV tables and JSON summaries. Every output file gets a
//! `<name>.provenance.json` record with the scenario hash, the RNG seed and
//! crate versions.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use epicampaign_core::{Error, Executor};
use rayon::prelude::*;

mod commands;
pub mod config;
pub mod output;

pub use commands::run;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or invalid scenario file or flags.
    Config(String),
    /// Reading inputs or writing outputs failed.
    Io(String),
    /// Raised by a solver or the simulator.
    Solver(Error),
}

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Solver(e) => match e {
                Error::Bracket { .. } | Error::NonMonotoneResource { .. } => "bracket",
                Error::Blowup { .. } | Error::OutOfBounds { .. } | Error::StepSize { .. } => "blowup",
                Error::Parameter(_)
                | Error::EmptyEdgeList
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::CostModel(_) => "config",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "config" => 2,
            "bracket" => 3,
            "blowup" => 4,
            _ => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) => write!(f, "{} error: {m}", self.class()),
            CliError::Solver(e) => write!(f, "{} error: {e}", self.class()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

/// Runs independent jobs on the rayon thread pool, keeping index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<R, F>(&self, n: usize, job: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).into_par_iter().map(job).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Optimal controls for fixed seeds.
    Solve,
    /// Optimal controls under a resource budget.
    SolveBudget,
    /// Optimal seeds and controls together.
    SolveJoint,
    /// Best static and two-stage controls.
    Heuristic,
    /// Agent-based simulation on a network.
    Simulate,
    /// Mean-field model against simulation.
    Validate,
    /// Convergence, uniqueness and structure checks.
    Check,
    /// Rewards of all strategies over a parameter grid.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::SolveBudget => "solve-budget",
            Command::SolveJoint => "solve-joint",
            Command::Heuristic => "heuristic",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
            Command::Check => "check",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    /// Cost weight `cost.b`.
    B,
    /// Constant spreading rate; `gamma` follows unless set in the file.
    Beta,
    /// Constant control effectiveness.
    Gamma,
    /// Horizon.
    #[value(name = "T")]
    Horizon,
    /// Uniform seed fraction.
    I0,
    /// Seed budget of the joint problem.
    #[value(name = "B_i0")]
    SeedBudget,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::B => "b",
            SweepParam::Beta => "beta",
            SweepParam::Gamma => "gamma",
            SweepParam::Horizon => "T",
            SweepParam::I0 => "i0",
            SweepParam::SeedBudget => "B_i0",
        }
    }
}

/// Controls applied in `simulate` and `validate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControlChoice {
    None,
    Optimal,
    Static,
    TwoStage,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "epicampaign", version, about = "Optimal campaigning resource allocation on networks")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// RNG seed for simulation and random joint starts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, requires = "sweep_values")]
    pub sweep_param: Option<SweepParam>,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', requires = "sweep_param")]
    pub sweep_values: Vec<f64>,
    /// Nodes per generated graph in `simulate` and `validate`.
    #[arg(long, default_value_t = 10_000)]
    pub nodes: usize,
    /// Monte Carlo runs in `simulate` and `validate`.
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, value_enum, default_value = "none")]
    pub controls: ControlChoice,
}

//! Batch front end for the invariant Hermitian curvature flow.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] hcflow_core::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hcflow", version, about = "Hermitian curvature flow of invariant metrics on C-spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; relative paths are placed under $HCF_OUTPUT_DIR when set
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Relative tolerance for ties in the minimal set of A_i
    #[arg(long, global = true)]
    pub tie_tol: Option<f64>,
    /// Print the parsed configuration as JSON and exit
    #[arg(long, global = true)]
    pub dump_config: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the initial metric and write the trajectory as CSV
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        t_end: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Also integrate with RK4 and add rk4_* columns
        #[arg(long)]
        cross_check: bool,
        /// Write every n-th step
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Limit form at the extinction time (JSON)
    Limit {
        #[command(flatten)]
        common: Common,
    },
    /// Static metric for --lambda, or the static residual of a metric with --check
    Static {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        /// Metric JSON ({"h": [...], "H": [[[re, im], ...], ...]}); defaults to the config's metric block or initial data
        #[arg(long, num_args = 0..=1, default_missing_value = "")]
        check: Option<String>,
    },
    /// Volume-normalized flow and its static limit (CSV)
    Normalize {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        t_end: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Volume constant V
        #[arg(long = "v", allow_negative_numbers = true)]
        v: Option<f64>,
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Residuals of the root identities and of the Chern tensor formulas (JSON)
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Table of Hermitian symmetric factor types
    Catalog {
        #[command(flatten)]
        common: Common,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    commands::dispatch(cli.command)
}

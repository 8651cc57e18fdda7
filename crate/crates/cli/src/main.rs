//! `exwave`: experiment harness for the strongly damped wave blow-up
//! laboratory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error,
//! 4 certification failure.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

/// Error with the exit-code contract baked in.
#[derive(Debug)]
pub struct CliError {
    message: String,
    exit_code: i32,
}

impl CliError {
    pub fn config(message: String) -> Self {
        CliError { message, exit_code: 2 }
    }

    pub fn runtime(message: String) -> Self {
        CliError { message, exit_code: 3 }
    }

    pub fn certification(message: String) -> Self {
        CliError { message, exit_code: 4 }
    }

    /// Core errors raised while turning a config into objects are the
    /// config's fault.
    pub fn from_config_stage(e: exwave_core::Error) -> Self {
        CliError::config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        self.exit_code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<exwave_core::Error> for CliError {
    fn from(e: exwave_core::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "exwave", version, about = "Strongly damped wave blow-up laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write history.csv + outcome.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Accept raw nodal data arrays in the config.
        #[arg(long)]
        allow_raw_data: bool,
    },
    /// Run a (p, amplitude) phase sweep and write phase.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Concurrent rows; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        allow_raw_data: bool,
    },
    /// Certify the harmonic weight properties on a refinement ladder.
    Weights {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        r0: f64,
        #[arg(long)]
        cells: usize,
        /// Truncation radius; defaults to r0 + 10.
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the cut-off integrals over a horizon ladder and fit the
    /// decay slope; writes scaling.csv, inequality.csv, scaling_report.json.
    Scaling {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated horizons, e.g. 8,16,32,64.
        #[arg(long, value_parser = parse_ladder)]
        ladder: Option<Ladder>,
        #[arg(long)]
        allow_raw_data: bool,
    },
}

#[derive(Clone, Debug)]
struct Ladder(Vec<f64>);

fn parse_ladder(s: &str) -> Result<Ladder, String> {
    let values: Result<Vec<f64>, _> =
        s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    values.map(Ladder).map_err(|e| format!("invalid ladder '{s}': {e}"))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, allow_raw_data } => {
            commands::cmd_simulate(&config, &out, allow_raw_data)
        }
        Command::Sweep { config, out, jobs, allow_raw_data } => {
            commands::cmd_sweep(&config, &out, jobs, allow_raw_data)
        }
        Command::Weights { dim, r0, cells, r_max, out } => {
            commands::cmd_weights(dim, r0, cells, r_max, &out)
        }
        Command::Scaling { config, out, ladder, allow_raw_data } => {
            commands::cmd_scaling(&config, &out, ladder.map(|l| l.0), allow_raw_data)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

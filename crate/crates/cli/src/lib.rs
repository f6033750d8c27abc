//! Batch front-end for boundary-control homotopy runs.
//!
//! Four commands share one TOML configuration:
//!
//! * `synthesize` integrates the homotopy and re-verifies the end data,
//! * `certify` runs the numerical certificates,
//! * `compare-naive` runs the scaling baseline beside the optimal scheme,
//! * `sweep` repeats `synthesize` over coefficient amplitudes and meshes.
//!
//! Every command writes `summary.json` naming the stage it reached, and maps
//! its outcome to a process exit code through [`Exit`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use commands::{certify, compare_naive, compare_naive_with, sweep, synthesize};
pub use config::{ConfigError, RunConfig};

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exit {
    Ok,
    /// Unreadable, unparseable or invalid configuration.
    Config,
    /// A constraint or certificate did not hold.
    Constraint,
    /// The integrator stopped before `s = 1`.
    Integrator,
    /// The naive baseline failed while the optimal scheme completed.
    NaiveFailed,
}

impl Exit {
    pub fn code(self) -> i32 {
        match self {
            Exit::Ok => 0,
            Exit::Config => 1,
            Exit::Constraint => 2,
            Exit::Integrator => 3,
            Exit::NaiveFailed => 4,
        }
    }

    pub fn status(self) -> &'static str {
        match self {
            Exit::Ok => "ok",
            Exit::Config => "config_error",
            Exit::Constraint => "constraint_failed",
            Exit::Integrator => "integrator_failed",
            Exit::NaiveFailed => "naive_failed",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hbc",
    version,
    about = "Boundary-control homotopy for gradient constraints"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the homotopy and verify the final boundary data.
    Synthesize { config: PathBuf },
    /// Run the certificate suite.
    Certify { config: PathBuf },
    /// Run the scaling baseline beside the optimal scheme.
    CompareNaive { config: PathBuf },
    /// Repeat synthesis over amplitude scales and mesh sizes.
    Sweep {
        config: PathBuf,
        /// Worker threads for independent sweep entries.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

pub fn run(cli: Cli) -> Exit {
    match cli.command {
        Command::Synthesize { config } => synthesize(&config),
        Command::Certify { config } => certify(&config),
        Command::CompareNaive { config } => compare_naive(&config),
        Command::Sweep { config, jobs } => sweep(&config, jobs),
    }
}

//! Command-line front end: configuration loading, the `analyze`, `sweep`, `simulate` and
//! `compare-qkd` subcommands, and report emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::CommandOutput;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "qds", version, about = "Finite-size analysis and simulation of quantum digital signatures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration, or a JSON report from an earlier `analyze`.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed for random behaviour (required by `simulate`).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct Range {
    /// One of distance_km, qx, qz, dark_count_prob, n_pulses, f_ec.
    #[arg(long)]
    pub param: String,
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full analysis on expected statistics; writes a JSON report.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Analysis over a parameter grid; writes CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
    },
    /// Monte Carlo scenario; writes CSV of event frequencies beside analytic values.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// One of honest, repudiation, forgery.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Signature feasibility against key-distribution key length over a grid; writes CSV.
    CompareQkd {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Analyze { common } | Command::Sweep { common, .. } | Command::Simulate { common, .. } | Command::CompareQkd { common, .. } => common,
        }
    }
}

/// Runs one command and returns its output without writing it.
pub fn execute(cmd: &Command) -> CliResult<CommandOutput> {
    let common = cmd.common();
    let cfg = RunConfig::load(&common.config)?;
    match cmd {
        Command::Analyze { .. } => commands::analyze(&cfg, common.seed),
        Command::Sweep { range, .. } => commands::sweep(&cfg, &range.param, range.from, range.to, range.step),
        Command::CompareQkd { range, .. } => commands::compare_qkd(&cfg, &range.param, range.from, range.to, range.step),
        Command::Simulate { scenario, trials, .. } => {
            let seed = common.seed.ok_or_else(|| CliError::Config("simulate requires --seed".into()))?;
            commands::simulate(&cfg, scenario, *trials, seed)
        }
    }
}

/// Runs one command, writes its output and returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = execute(&cli.command).and_then(|out| {
        let common = cli.command.common();
        match &common.out {
            Some(path) => std::fs::write(path, &out.bytes)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source })?,
            None => std::io::stdout()
                .write_all(&out.bytes)
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?,
        }
        Ok(out.exit_code)
    });
    match result {
        Ok(code) => {
            if code == error::EXIT_INFEASIBLE {
                eprintln!("qds: configuration is infeasible (report written with feasible = false)");
            }
            code
        }
        Err(e) => {
            eprintln!("qds: {e}");
            e.exit_code()
        }
    }
}

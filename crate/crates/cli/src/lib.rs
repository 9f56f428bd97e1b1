//! `dabound`: synthesize data, train, verify the transfer bound, and run grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "dabound", version, about = "Adversarial domain adaptation with transfer-bound tracking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub slack: Option<f64>,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample source and target datasets.
    SynthGen(Common),
    /// Train and write metrics, a checkpoint, and optional plots.
    Train(Common),
    /// Recheck `gap <= bound + slack` on a metrics file.
    VerifyBound {
        #[command(flatten)]
        common: Common,
        /// Metrics file; defaults to `<out>/metrics.csv`.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Sweep theta or the labeled ratio and tabulate target accuracy.
    Grid(Common),
}

fn config_of(c: &Common) -> CliResult<config::ExperimentConfig> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("missing --config".into()))?;
    commands::load_config(path, c.seed)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::SynthGen(c) => commands::synth_gen(&config_of(&c)?, c.out.as_deref()),
        Command::Train(c) => commands::train_cmd(&config_of(&c)?, c.out.as_deref(), c.svg),
        Command::VerifyBound { common: c, metrics } => {
            let cfg = match &c.config {
                Some(_) => Some(config_of(&c)?),
                None => None,
            };
            let path = match (metrics, &c.out, &cfg) {
                (Some(m), _, _) => m,
                (None, Some(o), _) => o.join("metrics.csv"),
                (None, None, Some(cfg)) => cfg.output_dir.join("metrics.csv"),
                (None, None, None) => {
                    return Err(CliError::Config("verify-bound needs --metrics, --out or --config".into()))
                }
            };
            let slack = c
                .slack
                .or(cfg.as_ref().map(|c| c.train.slack))
                .unwrap_or(dabound_core::bounds::BoundEvalConfig::default().slack);
            if !(slack >= 0.0) {
                return Err(CliError::Config(format!("invalid --slack {slack}")));
            }
            commands::verify_bound(&path, slack)
        }
        Command::Grid(c) => {
            let threads = commands::thread_cap(std::env::var("DABOUND_THREADS").ok().as_deref())?;
            commands::grid_cmd(&config_of(&c)?, c.out.as_deref(), threads)
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

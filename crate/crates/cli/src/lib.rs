//! Command-line front end for training step policies, planning, walking
//! scenarios, arm tracking and push sweeps.

pub mod commands;
pub mod config;
pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use locomotion::lipm::ApexState;
use locomotion::sim::Exec;
use thiserror::Error;

use crate::config::{Format, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    /// The run itself failed: a fall, a terminal plan, divergence.
    #[error("{0}")]
    Domain(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "locomotion", version, about)]
pub struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Assert the wall-time limits (plan and train).
    #[arg(long, global = true)]
    pub bench: bool,
    /// Overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a step policy and write a checkpoint plus a training report.
    Train {
        /// Checkpoint path (default: <out>/policy.ckpt).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Plan steps from an apex state.
    Plan {
        /// Without a checkpoint the policy is trained from the configuration.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Apex state `y,xdot,ydot`.
        #[arg(long, value_parser = parse_apex, default_value = "0.056,0.2,0", allow_hyphen_values = true)]
        apex: ApexState,
        #[arg(long, default_value_t = 15)]
        steps: usize,
    },
    /// Walk a scenario file.
    Walk {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        scenario: PathBuf,
    },
    /// Arm tracking of a vertical sinusoid, with and/or without the Jdot*qdot term.
    Track {
        #[arg(long)]
        with_jdot: bool,
        #[arg(long)]
        without_jdot: bool,
    },
    /// Push-recovery sweep over sampled start states.
    Sweep {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Run on one thread.
        #[arg(long)]
        sequential: bool,
    },
}

fn parse_apex(s: &str) -> Result<ApexState, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [y, xd, yd] => Ok(ApexState::new(*y, *xd, *yd)),
        _ => Err(format!("expected three comma-separated numbers, got {}", v.len())),
    }
}

impl Cli {
    /// The configuration with command-line overrides applied.
    pub fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load_or_default(self.config.as_deref())?;
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        Ok(cfg)
    }

    pub fn execute(&self) -> Result<(), CliError> {
        let cfg = self.config()?;
        match &self.command {
            Command::Train { checkpoint } => commands::train_cmd(&cfg, checkpoint.clone(), self.bench),
            Command::Plan { checkpoint, apex, steps } => {
                commands::plan_cmd(&cfg, checkpoint.as_deref(), *apex, *steps, self.bench)
            }
            Command::Walk { checkpoint, scenario } => {
                commands::walk_cmd(&cfg, checkpoint.as_deref(), scenario)
            }
            Command::Track { with_jdot, without_jdot } => {
                let modes: Vec<bool> = match (with_jdot, without_jdot) {
                    (true, false) => vec![true],
                    (false, true) => vec![false],
                    _ => vec![true, false],
                };
                commands::track_cmd(&cfg, &modes)
            }
            Command::Sweep { checkpoint, sequential } => {
                let exec = if *sequential { Exec::Sequential } else { Exec::Parallel };
                commands::sweep_cmd(&cfg, checkpoint.as_deref(), exec)
            }
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.execute() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

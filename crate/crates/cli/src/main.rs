//! `hypergauss`: check local matrix conditions, verify global inequalities,
//! certify interpolation flows, and print sharp constants, all from JSON
//! experiment configs.
//!
//! Exit codes: 0 everything holds, 1 a check is violated, 2 something is
//! inconclusive, 64 usage or config error.

mod config;
mod digest;
mod report;
mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{usage, UResult, Usage};
use run::{execute, Overrides};

#[derive(Parser)]
#[command(name = "hypergauss", version, about = "Gaussian inequality verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config, JSON
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Write the report to this file instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Override the config seed (also: HYPERGAUSS_SEED)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the Monte Carlo sample count
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Override the quadrature nodes per axis (0 = automatic)
    #[arg(long, global = true)]
    nodes: Option<usize>,

    /// Worker threads for concurrent records
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Margin tolerance when classifying deterministic verdicts
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a pointwise matrix condition and report margin plus witness
    CheckLocal,
    /// Verify an integral inequality end to end
    VerifyGlobal,
    /// Certify monotonicity of an interpolation curve
    Flow,
    /// Evaluate a sharp constant
    Constants,
    /// Run a curated battery of named checks
    Suite,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckLocal => "check-local",
            Command::VerifyGlobal => "verify-global",
            Command::Flow => "flow",
            Command::Constants => "constants",
            Command::Suite => "suite",
        }
    }
}

fn env_seed() -> UResult<Option<u64>> {
    match std::env::var("HYPERGAUSS_SEED") {
        Ok(v) => match v.parse::<u64>() {
            Ok(s) => Ok(Some(s)),
            Err(_) => usage(format!("HYPERGAUSS_SEED: not a 64-bit unsigned integer: '{v}'")),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => usage(format!("HYPERGAUSS_SEED: {e}")),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run_cli(cli));
}

fn run_cli(cli: Cli) -> i32 {
    let outcome = (|| -> UResult<_> {
        let config = cli
            .config
            .as_deref()
            .ok_or(Usage("--config is required".into()))?;
        let ov = Overrides {
            // Flag beats environment beats config file.
            seed: cli.seed.or(env_seed()?),
            samples: cli.samples,
            nodes: cli.nodes,
            jobs: cli.jobs,
            tolerance: cli.tolerance,
        };
        execute(cli.command.name(), config, &ov)
    })();
    match outcome {
        Ok((report, code)) => {
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, format!("{json}\n")) {
                        eprintln!("error: --out {}: {e}", path.display());
                        return 64;
                    }
                }
                None => println!("{json}"),
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            64
        }
    }
}

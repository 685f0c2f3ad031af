//! Batch front door for the Müntz exponential-system laboratory.
//!
//! Reads a JSON run configuration, executes the requested pipeline stages
//! in order (gram, biorth, bound-fit, expand, hereditary, operator), and
//! writes deterministic CSV tables plus a JSON report into the output
//! directory.
//!
//! Usage:
//!   muntzlab run --config run.json [--precision-override <bits>] [--out <dir>]
//!   muntzlab validate --config run.json
//!
//! Exit codes: 0 success; 1 configuration or i/o problems; 2 an assertion
//! or consistency failure inside a stage; 3 precision exhaustion.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::load_config;

#[derive(Parser)]
#[command(
    name = "muntzlab",
    version,
    about = "High-precision pipeline for Müntz exponential systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured pipeline stages and write data files.
    Run {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,

        /// Replace the configured mantissa bits (escalation headroom scales
        /// along).
        #[arg(long)]
        precision_override: Option<u32>,

        /// Replace the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration file and report every violation.
    Validate {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    let code = match cli.command {
        Command::Validate { config } => match load_config(&config) {
            Ok(_) => {
                println!("configuration is valid");
                0
            }
            Err(e) => {
                eprint!("{e}");
                1
            }
        },
        Command::Run {
            config,
            precision_override,
            out,
        } => match load_config(&config) {
            Ok(mut cfg) => {
                if let Some(bits) = precision_override {
                    if bits < 128 {
                        eprintln!("--precision-override {bits} is below the minimum of 128 bits");
                        return ExitCode::from(1);
                    }
                    cfg.precision.mantissa_bits = bits;
                    cfg.precision.escalation_limit =
                        cfg.precision.escalation_limit.max(bits.saturating_mul(8));
                }
                if let Some(dir) = out {
                    cfg.output_dir = dir;
                }
                pipeline::run(&cfg)
            }
            Err(e) => {
                eprint!("{e}");
                1
            }
        },
    };
    ExitCode::from(code as u8)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ukb_cli::{render, run, Command, RunConfig, INPUT_ERROR_EXIT};
use ukb_core::ToleranceConfig;

/// Verify the Kahler bundle geometry of a finite-dimensional C*-algebra.
///
/// Exit status: 0 when every check passes, 1 on a property violation,
/// 2 on unreadable or invalid input.
#[derive(Debug, Parser)]
#[command(name = "ukb-lab", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON input document.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Random samples per check.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Absolute equality tolerance.
    #[arg(long)]
    tol_eq: Option<f64>,
    /// Report destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock time in the report (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut tolerances = ToleranceConfig::with_seed(args.seed);
    if let Some(t) = args.tol_eq {
        tolerances.tol_eq = t;
    }
    let cfg = RunConfig {
        command: args.command,
        input_path: args.input,
        tolerances,
        samples: args.samples as usize,
        timing: args.timing,
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("ukb-lab: {e}");
            return ExitCode::from(INPUT_ERROR_EXIT as u8);
        }
    };
    let text = render(&report);
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("ukb-lab: cannot write {}: {e}", path.display());
                return ExitCode::from(INPUT_ERROR_EXIT as u8);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(report.exit_code() as u8)
}

//! Command dispatch for `ukb-lab`. Every command reads one JSON document and
//! produces a [`Report`]; the binary maps it to an exit code.

mod commands;
mod input;

use std::path::PathBuf;
use std::time::Instant;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;
use ukb_core::report::VerificationReport;
use ukb_core::{Error, ToleranceConfig};

pub use input::InputError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Decompose,
    Ideals,
    Gns,
    Distance,
    Gelfand,
    Star,
    Norm,
    HereditaryClassify,
    Theta,
    Xi,
    Sphere,
    SubbundleCheck,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: PathBuf,
    pub tolerances: ToleranceConfig,
    /// Random samples per command; at least 1.
    pub samples: usize,
    /// Adds wall-clock timing to the report, which makes it nondeterministic.
    pub timing: bool,
}

/// One named check. `clauses` carries the sub-checks of suite criteria.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub max_residual: f64,
    pub witnesses: Vec<Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub clauses: Vec<Check>,
}

impl From<VerificationReport> for Check {
    fn from(r: VerificationReport) -> Self {
        Self {
            name: r.check,
            pass: r.pass,
            max_residual: r.max_residual,
            witnesses: r.witnesses,
            clauses: r.clauses.into_iter().map(Check::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    /// Conjunction of all check outcomes.
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Command-specific output.
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Failure before any property could be checked; exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Core(#[from] Error),
}

pub const INPUT_ERROR_EXIT: i32 = 2;

pub fn run(cfg: &RunConfig) -> Result<Report, RunError> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("--samples must be at least 1".into()).into());
    }
    cfg.tolerances.validate()?;
    let start = Instant::now();
    let doc = input::read_document(&cfg.input_path)?;
    let (checks, result) = commands::dispatch(cfg, doc)?;
    let checks: Vec<Check> = checks.into_iter().map(Check::from).collect();
    Ok(Report {
        command: cfg.command.name(),
        seed: cfg.tolerances.rng_seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
        result,
        timing_ms: cfg.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Reports serialize with serde_json's shortest round-trip float format.
pub fn render(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports contain only JSON-safe values");
    s.push('\n');
    s
}

//! Experiment runner for the Carleman and stability numerics: JSON configs in,
//! deterministic CSV/JSON reports out.

use std::path::{Path, PathBuf};

pub mod config;
pub mod error;
pub mod oracles;
pub mod report;

mod commands;

pub use config::ExperimentConfig;
pub use error::{LabError, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};

/// Environment variable overriding the worker pool width.
pub const THREADS_ENV: &str = "CARLEMAN_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    VerifyCarleman,
    VerifyParabolic,
    Solve,
    Stability,
    ParabolicStability,
    OracleCheck,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::VerifyCarleman,
        Command::VerifyParabolic,
        Command::Solve,
        Command::Stability,
        Command::ParabolicStability,
        Command::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyCarleman => "verify-carleman",
            Command::VerifyParabolic => "verify-parabolic",
            Command::Solve => "solve",
            Command::Stability => "stability",
            Command::ParabolicStability => "parabolic-stability",
            Command::OracleCheck => "oracle-check",
        }
    }
}

/// What a run produced. `failure` is set when the artifacts were written but
/// the run still counts as failed (oracle mismatches, no stable region).
#[derive(Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub failure: Option<LabError>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(EXIT_OK, LabError::exit_code)
    }
}

fn pool_width(cfg: &ExperimentConfig) -> Result<Option<usize>, LabError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(LabError::Config(format!("{THREADS_ENV} = {v:?} is not a positive integer"))),
        },
        Err(_) => Ok(cfg.output.threads.filter(|&n| n > 0)),
    }
}

/// Loads and validates `config`, then runs `cmd`. Outputs go to `output_dir`
/// when given, else to the config's `output.dir` (relative to the working
/// directory).
pub fn run(cmd: Command, config: &Path, output_dir: Option<&Path>) -> Result<RunSummary, LabError> {
    let cfg = ExperimentConfig::load(config)?;
    run_config(cmd, &cfg, output_dir)
}

pub fn run_config(cmd: Command, cfg: &ExperimentConfig, output_dir: Option<&Path>) -> Result<RunSummary, LabError> {
    cfg.validate(cmd)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = pool_width(cfg)? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| LabError::Config(format!("worker pool: {e}")))?;
    let dir = output_dir.unwrap_or(&cfg.output.dir);
    pool.install(|| commands::dispatch(cmd, cfg, dir))
}

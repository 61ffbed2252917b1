//! Experiment runner for the `fwdcalc` core crate.
//!
//! Every subcommand reads a JSON config (or runs its defaults), writes a JSON report
//! with the resolved config and a set of CSV tables, and exits 0 only if all
//! configured tolerances hold. Timestamps and thread counts go to a separate
//! metadata file so that reports reproduce byte for byte.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod report;

use std::fmt;
use std::path::{Path, PathBuf};

pub use config::{Command, ConfigError, ExperimentConfig, Params};
pub use report::{Check, Outcome, Report, Written};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

pub const DEFAULT_OUT: &str = "fwdcalc-out";

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(fwdcalc::Error),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        use fwdcalc::Error as E;
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Core(
                E::InvalidGrid(_)
                | E::GridMismatch(_)
                | E::OffGrid(_)
                | E::InvalidParameter(_)
                | E::Capacity(_)
                | E::DerivativeCheck(_),
            ) => EXIT_CONFIG,
            RunError::Core(_) | RunError::Io(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<fwdcalc::Error> for RunError {
    fn from(e: fwdcalc::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Computes the outcome of `config` on the current rayon pool.
pub fn execute(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    use experiments as x;
    let seed = config.seed;
    match &config.params {
        Params::Simulate(p) => x::simulate(p, seed),
        Params::Qv(p) => x::qv(p, seed),
        Params::Itocheck(p) => x::itocheck(p, seed),
        Params::Amtest(p) => x::amtest(p, seed),
        Params::Hedge(p) => x::hedge(p, seed),
        Params::Utility(p) => x::utility(p, seed),
        Params::Funcheck(p) => x::funcheck(p, seed),
        Params::Fullsupport(p) => x::fullsupport(p, seed),
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub written: Written,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.report.pass {
            EXIT_PASS
        } else {
            EXIT_TOLERANCE
        }
    }
}

/// Runs `config` on a pool of `threads` workers (rayon's default when `None`) and
/// writes the report files into `out`, falling back to the config's directory.
pub fn run(
    config: &ExperimentConfig,
    out: Option<&Path>,
    threads: Option<usize>,
) -> Result<RunOutput, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(ConfigError("--threads must be positive".into()).into());
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))?;
    let outcome = pool.install(|| execute(config))?;
    let report = Report::new(config, &outcome);
    let dir: PathBuf = out
        .map(Path::to_path_buf)
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let written = report::write(&dir, &report, &outcome, pool.current_num_threads())?;
    Ok(RunOutput { report, written })
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fwdcalc_cli::{run, Command, ExperimentConfig, EXIT_CONFIG};

#[derive(Debug, Parser)]
#[command(
    name = "fwdcalc",
    version,
    about = "Regularization calculus experiments"
)]
struct Cli {
    #[command(subcommand)]
    action: Action,
    /// JSON experiment config; defaults are used for anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; never changes the numbers.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Action {
    /// Path ensembles, the discrete Itô identity and QV tables.
    Simulate,
    /// Quadratic variation targets and convergence studies.
    Qv,
    /// Itô formula and integration by parts residuals.
    Itocheck,
    /// A-martingale tests of the compensated weak Brownian motion.
    Amtest,
    /// PDE prices and delta-hedge replication.
    Hedge,
    /// Log-utility scan and the optimality test.
    Utility,
    /// Pathwise wealth functional against the forward integral.
    Funcheck,
    /// Brownian tube fractions.
    Fullsupport,
    /// Runs the command named in the config file.
    Run,
}

impl Action {
    fn command(&self) -> Option<Command> {
        Some(match self {
            Action::Simulate => Command::Simulate,
            Action::Qv => Command::Qv,
            Action::Itocheck => Command::Itocheck,
            Action::Amtest => Command::Amtest,
            Action::Hedge => Command::Hedge,
            Action::Utility => Command::Utility,
            Action::Funcheck => Command::Funcheck,
            Action::Fullsupport => Command::Fullsupport,
            Action::Run => return None,
        })
    }
}

fn load(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let command = cli.action.command();
    let mut cfg = match (&cli.config, command) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
            ExperimentConfig::from_json(&text, command)?
        }
        (None, Some(c)) => ExperimentConfig::defaults(c),
        (None, None) => anyhow::bail!("`run` needs --config"),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fwdcalc: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match run(&cfg, cli.out.as_deref(), cli.threads) {
        Ok(out) => {
            for c in out.report.failed_checks() {
                eprintln!("FAIL {}: {} (bound {})", c.name, c.value, c.bound);
            }
            println!(
                "{} {}: {} ({} checks)",
                cfg.command,
                if out.report.pass { "pass" } else { "fail" },
                out.written.report.display(),
                out.report.checks.len()
            );
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("fwdcalc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

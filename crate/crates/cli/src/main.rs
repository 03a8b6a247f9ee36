//! Command-line front end: parse distribution files and a run config,
//! execute the computation commands, and run the verification suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 numerical non-convergence.

mod commands;
mod config;
mod json;
mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, CliResult};
use config::RunConfig;
use json::Json;

#[derive(Parser)]
#[command(
    name = "mixent",
    version,
    about = "Information-estimation quantities for scalar Gaussian mixtures \
             over additive Gaussian noise channels"
)]
struct Cli {
    /// Flat key=value configuration file (quad.tol1d, quad.tol2d,
    /// quad.max_levels, gamma.grid, mc.seed, mc.samples, output.dir)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV/JSON artifacts (overrides output.dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Rescale input weights whose sum is off by more than 1e-9
    #[arg(long, global = true)]
    renormalize: bool,

    /// Seed override for Monte Carlo cross-checks (overrides mc.seed)
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MMSE and output Fisher information over an SNR list (CSV on stdout)
    Mmse {
        /// Distribution file (JSON: weights, means, variances)
        dist: PathBuf,
        /// Comma-separated SNR values, evaluated in input order
        #[arg(long, value_delimiter = ',', required = true)]
        gamma: Vec<f64>,
    },
    /// Differential entropy in nats (JSON report on stdout)
    Entropy {
        dist: PathBuf,
        /// direct | immse (immse also reports agreement with direct)
        #[arg(long, default_value = "direct")]
        method: String,
    },
    /// Entropy-combination deficit for an input pair (JSON + samples CSV)
    Deficit {
        x1: PathBuf,
        x2: PathBuf,
        /// Combination parameter in [0, 1]
        #[arg(long)]
        alpha: f64,
    },
    /// Equality-condition diagnostics over the SNR grid (JSON report)
    Diagnose {
        x1: PathBuf,
        x2: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// Comma-separated SNR grid (defaults to gamma.grid)
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
    },
    /// Relative entropy D(P||Q) in nats (JSON report)
    Kl {
        p: PathBuf,
        q: PathBuf,
        /// Comma-separated subset of: direct, mismatched, fisher
        #[arg(long, default_value = "direct", value_delimiter = ',')]
        method: Vec<String>,
    },
    /// Run the verification suite (exit 0 iff everything passes)
    Verify {
        /// fast | full (full adds Monte Carlo cross-checks)
        #[arg(long, default_value = "fast")]
        suite: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::ChecksFailed(_)) => ExitCode::from(1),
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.mc_seed = seed;
    }

    match &cli.command {
        Command::Mmse { dist, gamma } => {
            let gm = commands::load_mixture(dist, cli.renormalize)?;
            let artifacts = commands::cmd_mmse(&gm, gamma, &cfg)?;
            print!("{}", artifacts.stdout);
            artifacts.persist(cfg.output_dir.as_ref())
        }
        Command::Entropy { dist, method } => {
            let gm = commands::load_mixture(dist, cli.renormalize)?;
            let artifacts = commands::cmd_entropy(&gm, method, &cfg)?;
            print!("{}", artifacts.stdout);
            artifacts.persist(cfg.output_dir.as_ref())
        }
        Command::Deficit { x1, x2, alpha } => {
            let a = commands::load_mixture(x1, cli.renormalize)?;
            let b = commands::load_mixture(x2, cli.renormalize)?;
            let artifacts = commands::cmd_deficit(&a, &b, *alpha, &cfg)?;
            print!("{}", artifacts.stdout);
            artifacts.persist(cfg.output_dir.as_ref())
        }
        Command::Diagnose {
            x1,
            x2,
            alpha,
            gamma,
        } => {
            let a = commands::load_mixture(x1, cli.renormalize)?;
            let b = commands::load_mixture(x2, cli.renormalize)?;
            let grid = gamma.clone().unwrap_or_else(|| cfg.gamma_grid.clone());
            let artifacts = commands::cmd_diagnose(&a, &b, *alpha, &grid, &cfg)?;
            print!("{}", artifacts.stdout);
            artifacts.persist(cfg.output_dir.as_ref())
        }
        Command::Kl { p, q, method } => {
            let pm = commands::load_mixture(p, cli.renormalize)?;
            let qm = commands::load_mixture(q, cli.renormalize)?;
            let artifacts = commands::cmd_kl(&pm, &qm, method, &cfg)?;
            print!("{}", artifacts.stdout);
            artifacts.persist(cfg.output_dir.as_ref())
        }
        Command::Verify { suite } => run_verify(suite, &cfg),
    }
}

fn run_verify(suite: &str, cfg: &RunConfig) -> CliResult<()> {
    let suite_kind = match suite {
        "fast" => verify::Suite::Fast,
        "full" => verify::Suite::Full,
        other => {
            return Err(CliError::Input(format!(
                "unknown suite: {other} (expected fast or full)"
            )))
        }
    };
    let checks = verify::run_suite(suite_kind, cfg);
    let failures: Vec<&verify::Check> = checks.iter().filter(|c| !c.passed).collect();

    let mut report = Json::obj();
    report.push("command", Json::Str("verify".into()));
    report.push("version", Json::Str(env!("CARGO_PKG_VERSION").into()));
    let mut inputs = Json::obj();
    inputs.push("suite", Json::Str(suite.into()));
    report.push("inputs", inputs);
    let mut results = Json::obj();
    results.push(
        "checks",
        Json::Arr(checks.iter().map(|c| c.to_json()).collect()),
    );
    results.push("passed", Json::Bool(failures.is_empty()));
    results.push("failures", Json::Int(failures.len() as i64));
    report.push("results", results);
    print!("{}", report.render());

    if failures.is_empty() {
        Ok(())
    } else {
        for check in failures.iter().take(10) {
            match (&check.residual, &check.note) {
                (Some(residual), _) => eprintln!(
                    "FAIL {}: residual {residual:.6e} > threshold {:.6e}",
                    check.name, check.threshold
                ),
                (None, Some(note)) => eprintln!("FAIL {}: {note}", check.name),
                (None, None) => eprintln!("FAIL {}", check.name),
            }
        }
        Err(CliError::ChecksFailed(failures.len()))
    }
}

//! `ges`: estimates pullback, forward and uniform omega-limits of the
//! registered model systems and checks the structural properties around
//! them. See `exit.rs` for the exit codes.

mod commands;
mod config;
mod exit;
mod nse_cmd;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ges_core::MetricKind;
use ges_systems::nse::BallConvention;

use crate::commands::Ctx;
use crate::config::ExperimentConfig;
use crate::exit::{CliError, CliResult};
use crate::output::OutDir;

#[derive(Parser, Debug)]
#[command(
    name = "ges",
    version,
    about = "Pullback attractor experiments on generalized evolutionary systems"
)]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of every random sample.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Convergence / attraction tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true, env = "GES_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the pullback omega-limit at t = 0.
    Omega {
        #[arg(long)]
        system: Option<String>,
        #[arg(long, value_parser = parse_metric)]
        metric: Option<MetricKind>,
        /// Forward (autonomous) limit instead of pullback.
        #[arg(long)]
        forward: bool,
    },
    /// Attraction profile of a candidate set.
    Attract {
        #[arg(long)]
        system: Option<String>,
        #[arg(long, value_parser = parse_metric)]
        metric: Option<MetricKind>,
        /// zero | known | omega
        #[arg(long, default_value = "zero")]
        candidate: String,
        /// default | witness | probes
        #[arg(long, default_value = "default")]
        seeds: String,
    },
    /// Run an invariant suite: metrics | inclusion | energy | invariance | tracking | uniform | all.
    Verify {
        suite: String,
        #[arg(long)]
        system: Option<String>,
    },
    /// Forcing analysis and absorbing-ball ensembles of the Galerkin system.
    Nse {
        /// Forcing JSON file.
        #[arg(long)]
        forcing: Option<PathBuf>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        kmax: Option<i32>,
        /// paper-norm | energy-squared
        #[arg(long, value_parser = parse_convention)]
        convention: Option<BallConvention>,
        /// Comma-separated thresholds for the normality table.
        #[arg(long, value_delimiter = ',')]
        eps_list: Option<Vec<f64>>,
    },
    /// Uniform omega-limit over a symbol family and its union inclusion.
    Uniform {
        #[arg(long)]
        system: Option<String>,
        #[arg(long, value_parser = parse_metric)]
        metric: Option<MetricKind>,
    },
    /// Pullback invariance of the closed-form attractor.
    Invariance {
        #[arg(long)]
        system: Option<String>,
        /// semi | quasi | full
        #[arg(long, default_value = "full")]
        kind: String,
        #[arg(long, value_parser = parse_metric)]
        metric: Option<MetricKind>,
    },
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|e: ges_core::Error| e.to_string())
}

fn parse_convention(s: &str) -> Result<BallConvention, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown convention `{s}` (paper-norm|energy-squared)"))
}

fn run(cli: Cli) -> CliResult<u8> {
    let cfg = ExperimentConfig::load(cli.config.as_deref())?;
    cfg.validate()?;
    if cli.tol.is_some_and(|t| !(t > 0.0)) {
        return Err(CliError::usage("--tol must be positive"));
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::software(e.to_string()))?;
    }
    let out_dir = cli
        .out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("ges-out"));
    let ctx = Ctx {
        out: OutDir::create(&out_dir)?,
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        tol: cli.tol,
        cfg,
    };
    match &cli.command {
        Command::Omega {
            system,
            metric,
            forward,
        } => commands::cmd_omega(&ctx, system.as_deref(), *metric, *forward),
        Command::Attract {
            system,
            metric,
            candidate,
            seeds,
        } => commands::cmd_attract(&ctx, system.as_deref(), *metric, candidate, seeds),
        Command::Verify { suite, system } => verify::cmd_verify(&ctx, suite, system.as_deref()),
        Command::Nse {
            forcing,
            nu,
            kmax,
            convention,
            eps_list,
        } => nse_cmd::cmd_nse(
            &ctx,
            &nse_cmd::NseArgs {
                forcing: forcing.as_deref(),
                nu: *nu,
                kmax: *kmax,
                convention: *convention,
                eps_list: eps_list.clone(),
            },
        ),
        Command::Uniform { system, metric } => {
            commands::cmd_uniform(&ctx, system.as_deref(), *metric)
        }
        Command::Invariance {
            system,
            kind,
            metric,
        } => commands::cmd_invariance(&ctx, system.as_deref(), kind, *metric),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ges: {e}");
            ExitCode::from(e.code)
        }
    }
}

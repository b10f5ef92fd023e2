//! `mechlab` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a bound or strategyproofness
//! violation is found, 2 on bad input.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mechlab::generate::Generator;
use mechlab::{ObjectiveKind, Preset, QuantileConfig};

#[derive(Debug, Parser)]
#[command(name = "mechlab", version, about = "Quantile mechanisms for two-facility location on a line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the mechanism on an instance file and print the trace.
    Run {
        #[arg(long)]
        instance: String,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        objective: Option<ObjectiveKind>,
    },
    /// Exact optimal placement for an instance file.
    Opt {
        #[arg(long)]
        instance: String,
        #[arg(long, default_value = "aoa")]
        objective: ObjectiveKind,
    },
    /// Distortion scan (or strategyproofness sweep with --sp) over seeded instances.
    Audit(AuditArgs),
    /// Distortion scan over a grid of (alpha, beta) values.
    Sweep(SweepArgs),
    /// Replay the lower-bound instance family of an objective.
    Families {
        #[arg(long, default_value = "aoa")]
        objective: ObjectiveKind,
        #[arg(long, default_value_t = mechlab::families::DEFAULT_THETA)]
        theta: f64,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Debug, Clone, Args)]
struct ConfigArgs {
    /// Named mechanism: aoa, mom, moa or aom.
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    preset: Option<Preset>,
    #[arg(long, requires = "beta")]
    alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    beta: Option<f64>,
}

impl ConfigArgs {
    fn is_set(&self) -> bool {
        self.preset.is_some() || self.alpha.is_some()
    }

    /// Explicit config if given, else the preset matching `fallback`.
    fn resolve(&self, fallback: ObjectiveKind) -> Result<QuantileConfig, String> {
        match (self.preset, self.alpha, self.beta) {
            (Some(p), _, _) => Ok(p.config()),
            (None, Some(a), Some(b)) => QuantileConfig::new(a, b).map_err(|e| e.to_string()),
            _ => Ok(Preset::for_objective(fallback).config()),
        }
    }
}

#[derive(Debug, Args)]
pub(crate) struct ScanArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub(crate) trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub(crate) seed: u64,
    #[arg(long, default_value = "uniform-random")]
    pub(crate) generator: Generator,
    /// Upper end of theta for the paper-family generator.
    #[arg(long, default_value_t = mechlab::families::DEFAULT_THETA)]
    pub(crate) theta: f64,
    /// Largest number of groups per generated instance.
    #[arg(long, default_value_t = 5)]
    pub(crate) max_groups: usize,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    pub(crate) out: Option<String>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    objective: Option<ObjectiveKind>,
    /// Check strategyproofness instead of distortion.
    #[arg(long)]
    sp: bool,
    #[command(flatten)]
    scan: ScanArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.382,0.5,0.8")]
    alphas: Vec<f64>,
    /// Comma-separated beta values.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    betas: Vec<f64>,
    #[arg(long, default_value = "moa")]
    objective: ObjectiveKind,
    #[command(flatten)]
    scan: ScanArgs,
}

/// Failure that maps to an exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Violation,
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Input(s)
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("MECHLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("MECHLAB_THREADS must be a positive integer, got `{raw}`"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Run { instance, config, objective } => {
            let objective = objective.or(config.preset.map(Preset::objective)).unwrap_or(ObjectiveKind::AoA);
            commands::run(&instance, config.resolve(objective)?, objective)
        }
        Command::Opt { instance, objective } => commands::opt(&instance, objective),
        Command::Audit(args) => {
            let jobs = if args.sp {
                None
            } else if !args.config.is_set() && args.objective.is_none() {
                Some(Preset::ALL.iter().map(|p| (p.config(), p.objective())).collect())
            } else {
                let objective = args
                    .objective
                    .or(args.config.preset.map(Preset::objective))
                    .unwrap_or(ObjectiveKind::AoA);
                Some(vec![(args.config.resolve(objective)?, objective)])
            };
            match jobs {
                Some(jobs) => commands::audit_distortion(&jobs, &args.scan),
                None => {
                    let configs = if args.config.is_set() {
                        vec![args.config.resolve(ObjectiveKind::AoA)?]
                    } else {
                        mechlab::audit::SpSuiteConfig::default_configs()
                    };
                    commands::audit_sp(&configs, &args.scan)
                }
            }
        }
        Command::Sweep(args) => commands::sweep(&args.alphas, &args.betas, args.objective, &args.scan),
        Command::Families { objective, theta, config } => {
            commands::families(objective, theta, config.resolve(objective)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Overrides};
use config::StudyConfig;
use output::Sink;

#[derive(Parser)]
#[command(name = "corpuscle", version, about = "Wave corpuscles in external electromagnetic fields")]
struct Cli {
    /// JSON study configuration; the built-in uniform-field study when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Quadrature nodes per panel (concentration) or per ray (split).
    #[arg(long, global = true)]
    quad_nodes: Option<usize>,
    /// Overrides the trajectory step.
    #[arg(long, global = true)]
    step: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct G' from the radial profile.
    Reconstruct,
    /// Split the vector potential about r0 into gradient and tangent parts.
    Split,
    /// Integrate the Newton–Lorentz trajectory and its phase.
    Trajectory,
    /// Check that the corpuscle solves the nonlinear equation.
    CorpuscleVerify,
    /// Residuals of the local conservation laws and their orders.
    Conserve,
    /// Run the concentration study over the schedule.
    Concentrate,
    /// Run the built-in numerical checks.
    Selftest,
    /// Print the effective configuration as JSON.
    ShowConfig,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => StudyConfig::load(path)?,
        None => StudyConfig::builtin(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(step) = cli.step {
        cfg.initial_state.step = step;
    }
    if cli.quad_nodes == Some(0) {
        return Err(Failure::Config("--quad-nodes must be positive".into()));
    }
    cfg.validate()?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    }
    let over = Overrides { quad_nodes: cli.quad_nodes };
    let sink = Sink { dir: cli.out.clone(), prefix: cfg.output.prefix.clone(), summary_json: cfg.output.summary_json };
    log::info!("running with seed {} and step {:e}", cfg.seed, cfg.initial_state.step);
    match cli.command {
        Command::Reconstruct => commands::reconstruct(&cfg, &sink),
        Command::Split => commands::split(&cfg, &over, &sink),
        Command::Trajectory => commands::trajectory(&cfg, &sink),
        Command::CorpuscleVerify => commands::corpuscle_verify(&cfg, &sink),
        Command::Conserve => commands::conserve(&cfg, &sink),
        Command::Concentrate => commands::concentrate(&cfg, &over, &sink),
        Command::Selftest => commands::selftest(&sink),
        Command::ShowConfig => {
            println!("{}", cfg.to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CORPUSCLE_LOG", "error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `sis-sde`: scenario runner for the SIS demographic-stochasticity models.
//!
//! Data goes to files under `--out`, diagnostics to stderr; seeding is
//! reproducible and `--workers` changes speed, never results.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sis_sde::cli::run::{run, Command as RunCommand};

#[derive(Parser)]
#[command(name = "sis-sde", version, about = "SIS stochastic simulation toolkit")]
struct Cli {
    /// Scenario configuration file (flat key = value format).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for path ensembles (default: all cores). Results are
    /// bitwise independent of this value.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory (overrides output.dir from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Simulate the triangular (Y, X) diffusion ensemble.
    Simulate,
    /// Simulate the discrete jump-chain oracle.
    Jump,
    /// Shared-driver refinement study with error and bound reports.
    Converge,
    /// Empirically audit the declared coefficient assumptions.
    Validate,
    /// Evolve the lattice master equation or the forward PDE.
    FokkerPlanck,
    /// Compare the master-equation density against the jump-chain histogram.
    Compare,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("cannot configure {workers} workers: {e}");
            return ExitCode::from(4);
        }
    }
    let Some(config) = cli.config.as_deref() else {
        eprintln!("config error: --config PATH is required");
        return ExitCode::from(2);
    };
    let cmd = match cli.command {
        Commands::Simulate => RunCommand::Simulate,
        Commands::Jump => RunCommand::Jump,
        Commands::Converge => RunCommand::Converge,
        Commands::Validate => RunCommand::Validate,
        Commands::FokkerPlanck => RunCommand::FokkerPlanck,
        Commands::Compare => RunCommand::Compare,
    };
    ExitCode::from(run(cmd, config, cli.seed, cli.out.as_deref()) as u8)
}

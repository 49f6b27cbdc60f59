//! Command-line entry point: argument parsing and exit-code mapping.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spde_tamed::cli::{self, CliOptions, Command};

#[derive(Parser)]
#[command(
    name = "spde-tamed",
    version,
    about = "Tamed exponential Euler simulation of semilinear SPDEs with \
             exponential-moment diagnostics"
)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo estimate of the exponential Lyapunov moment
    Simulate(CommonArgs),
    /// Structural property checks with measured residuals
    Verify(CommonArgs),
    /// Mesh-refinement sweep of the moment estimate
    Sweep(CommonArgs),
    /// Theoretical moment bound on the (log-log, log) scale
    Bound(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Config file (.json or .toml)
    #[arg(long)]
    config: PathBuf,
    /// RNG seed; overrides the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to SPDE_TAMED_THREADS, then all cores
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides the config's output.dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo path count; overrides the config
    #[arg(long)]
    paths: Option<u64>,
    /// Comma-separated mesh widths, strictly descending
    #[arg(long, value_delimiter = ',')]
    mesh: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (command, common) = match args.command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Bound(c) => (Command::Bound, c),
    };
    let opts = CliOptions {
        command,
        config_path: common.config,
        seed: common.seed,
        threads: common.threads,
        out: common.out,
        paths: common.paths,
        mesh: common.mesh,
    };
    match cli::run(&opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

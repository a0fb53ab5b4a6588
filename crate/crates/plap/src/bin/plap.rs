use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plap::experiments::{run, Command};

/// Graph and hypergraph p-Laplacian solvers for semi-supervised learning on
/// point clouds.
#[derive(Parser)]
#[command(name = "plap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a flat key=value config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `out` key).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a point cloud and write it as CSV.
    Sample(RunArgs),
    /// Solve one constrained equation and write solution + report.
    Solve(RunArgs),
    /// Reproduce the five-panel 1D interpolation figure.
    Figure1(RunArgs),
    /// 1D solution error against the closed-form continuum limit.
    #[command(name = "sweep-convergence")]
    SweepConvergence(RunArgs),
    /// Interior consistency rate on 2D regular grids.
    #[command(name = "sweep-consistency")]
    SweepConsistency(RunArgs),
    /// Hoelder-ratio boundedness across a sample-size ladder.
    #[command(name = "sweep-holder")]
    SweepHolder(RunArgs),
}

fn main() -> ExitCode {
    // PLAP_THREADS caps the worker count; 0 or unset means automatic.
    if let Ok(v) = std::env::var("PLAP_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Sample(a) => (Command::Sample, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Figure1(a) => (Command::Figure1, a),
        Cmd::SweepConvergence(a) => (Command::SweepConvergence, a),
        Cmd::SweepConsistency(a) => (Command::SweepConsistency, a),
        Cmd::SweepHolder(a) => (Command::SweepHolder, a),
    };
    match run(command, &args.config, args.out.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

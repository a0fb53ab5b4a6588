//! Experiment harness: flat-file configuration, dataset and solution
//! persistence, and the canned experiment commands behind the `plap` CLI.

pub mod commands;
pub mod config;
pub mod io;
pub mod svg;

use std::path::Path;

pub use config::{ExperimentConfig, ResolvedConfig, Scheme};

/// CLI-facing errors with the documented exit codes: 0 success, 2 config
/// error, 3 connectivity, 4 resolution, 5 regime violation; 1 for everything
/// else (IO, non-convergence, failed sweep assertions).
#[derive(Clone, Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Connectivity(String),
    #[error("{0}")]
    Resolution(String),
    #[error("{0}")]
    Regime(String),
    #[error("solver did not converge within max_iter")]
    NotConverged,
    #[error("io error: {0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Connectivity(_) => 3,
            CliError::Resolution(_) => 4,
            CliError::Regime(_) => 5,
            CliError::NotConverged | CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sample,
    Solve,
    Figure1,
    SweepConvergence,
    SweepConsistency,
    SweepHolder,
}

/// Loads the config and dispatches one command. `out_flag` (the CLI `--out`)
/// overrides the config's `out` key.
pub fn run(command: Command, config_path: &Path, out_flag: Option<&Path>) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let out = cfg.out_dir(out_flag)?;
    match command {
        Command::Sample => commands::cmd_sample(&cfg, base, &out),
        Command::Solve => commands::cmd_solve(&cfg, base, &out),
        Command::Figure1 => commands::cmd_figure1(&cfg, base, &out),
        Command::SweepConvergence => commands::cmd_sweep_convergence(&cfg, base, &out),
        Command::SweepConsistency => commands::cmd_sweep_consistency(&cfg, base, &out),
        Command::SweepHolder => commands::cmd_sweep_holder(&cfg, base, &out),
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use calib_cli::config::{Config, Overrides};
use calib_cli::{execute, Command, EXIT_CONFIG};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "calib", version, about = "Runs calibration verification scenarios")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replaces the tolerance of every check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Comass optimizer restarts.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Base step for chart finite differences.
    #[arg(long = "fd-step", global = true)]
    fd_step: Option<f64>,
    /// Also write the records to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario.
    Run { scenario: String },
    /// Run every registered scenario.
    RunAll,
    /// List registered scenarios.
    List,
    /// Print a preset's structure constants and forms as JSON.
    ExportPreset { name: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let base = match &cli.config {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    };
    let overrides = Overrides { seed: cli.seed, tol: cli.tol, restarts: cli.restarts, fd_step: cli.fd_step };
    let cfg = match base.and_then(|c| c.apply(&overrides)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let command = match cli.command {
        Cmd::Run { scenario } => Command::Run(scenario),
        Cmd::RunAll => Command::RunAll,
        Cmd::List => Command::List,
        Cmd::ExportPreset { name } => Command::ExportPreset(name),
    };
    let code = execute(&command, &cfg, cli.report.as_ref(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}

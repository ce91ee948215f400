//! Scenario runner over the preset registry.

pub mod config;
pub mod report;
pub mod scenarios;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use calib_core::rng;
use rayon::prelude::*;

use config::{Config, ConfigError};
use report::{Aggregate, Recorder, ScenarioReport};
use scenarios::{Ctx, Scenario, REGISTRY};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub fn run_one(s: &Scenario, cfg: &Config) -> ScenarioReport {
    let start = Instant::now();
    let ctx = Ctx { cfg, seed: rng::derive(cfg.seed, s.name) };
    let mut rec = Recorder::new(s.name, cfg);
    let outcome = (s.run)(&ctx, &mut rec);
    let error = outcome.err().map(|e| e.to_string());
    let pass = error.is_none() && !rec.measurements.is_empty() && rec.measurements.iter().all(|m| m.pass);
    ScenarioReport {
        scenario: s.name.to_string(),
        criterion: s.criterion,
        pass,
        seed: cfg.seed,
        measurements: rec.measurements,
        error,
        elapsed: start.elapsed(),
    }
}

/// Runs in parallel; reports come back in the order given.
pub fn run_many(list: &[&Scenario], cfg: &Config) -> Vec<ScenarioReport> {
    list.par_iter().map(|s| run_one(s, cfg)).collect()
}

pub fn run_named(name: &str, cfg: &Config) -> Result<ScenarioReport, ConfigError> {
    let s = scenarios::find(name)
        .ok_or_else(|| ConfigError::UnknownScenario { name: name.to_string(), available: scenarios::listing() })?;
    Ok(run_one(s, cfg))
}

pub fn run_all(cfg: &Config) -> Vec<ScenarioReport> {
    let all: Vec<&Scenario> = REGISTRY.iter().collect();
    run_many(&all, cfg)
}

pub enum Command {
    Run(String),
    RunAll,
    List,
    ExportPreset(String),
}

/// Executes a command: records go to `out` (and the report file), the
/// summary table and diagnostics to `err`. Returns the exit status.
pub fn execute(cmd: &Command, cfg: &Config, report: Option<&PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cmd, cfg, report, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG
        }
    }
}

fn dispatch(cmd: &Command, cfg: &Config, report: Option<&PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, ConfigError> {
    let io = |e: std::io::Error| ConfigError::Invalid(format!("output: {e}"));
    let reports = match cmd {
        Command::List => {
            writeln!(out, "{}", scenarios::listing()).map_err(io)?;
            return Ok(EXIT_PASS);
        }
        Command::ExportPreset(name) => {
            let p = calib_core::coframe::presets::preset(name).map_err(|e| ConfigError::Preset(e.to_string()))?;
            let text = serde_json::to_string_pretty(&p.export()).expect("export serializes");
            writeln!(out, "{text}").map_err(io)?;
            return Ok(EXIT_PASS);
        }
        Command::Run(name) => vec![run_named(name, cfg)?],
        Command::RunAll => run_all(cfg),
    };
    let mut lines: Vec<String> = reports.iter().map(|r| r.to_json()).collect();
    if matches!(cmd, Command::RunAll) {
        lines.push(serde_json::to_string(&Aggregate::new(cfg.seed, &reports)).expect("aggregate serializes"));
    }
    let body = lines.join("\n") + "\n";
    out.write_all(body.as_bytes()).map_err(io)?;
    if let Some(path) = report {
        std::fs::write(path, &body).map_err(|e| ConfigError::Invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    write!(err, "{}", report::summary_table(&reports)).map_err(io)?;
    Ok(if reports.iter().all(|r| r.pass) { EXIT_PASS } else { EXIT_FAIL })
}

//! One pass/fail line per acceptance criterion.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use calib_cli::config::Config;
use calib_cli::report::ScenarioReport;
use calib_cli::run_many;
use calib_cli::scenarios::{Scenario, REGISTRY};

const TITLES: [&str; 11] = [
    "comass suite",
    "algebraic identities",
    "preset integrity",
    "calibration criteria",
    "moduli dimensions",
    "nearly parallel algebra",
    "nearly Kahler suite",
    "hermitian chart suite",
    "ellipticity",
    "energy suite",
    "determinism",
];

fn scenarios_for(criterion: u8) -> Vec<&'static Scenario> {
    REGISTRY.iter().filter(|s| s.criterion == criterion).collect()
}

fn describe(reports: &[ScenarioReport]) -> String {
    let checks: usize = reports.iter().map(|r| r.measurements.len()).sum();
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| {
            let err = r.error.iter().map(move |e| format!("{}: {e}", r.scenario));
            let bad = r.failures().map(move |m| format!("{}.{} = {:e}", r.scenario, m.name, m.value));
            err.chain(bad)
        })
        .collect();
    if failed.is_empty() {
        format!("{checks} checks")
    } else {
        failed.join("; ")
    }
}

fn run_all_to(path: &PathBuf) -> (i32, Duration) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_calib"))
        .args(["run-all", "--seed", "1", "--report"])
        .arg(path)
        .output()
        .expect("binary runs");
    (status.status.code().unwrap_or(-1), start.elapsed())
}

fn main() {
    let cfg = Config::default();
    let mut lines = Vec::new();
    let mut all_pass = true;
    for criterion in 1..=10u8 {
        let start = Instant::now();
        let reports = run_many(&scenarios_for(criterion), &cfg);
        let elapsed = start.elapsed();
        let mut pass = reports.iter().all(|r| r.pass);
        let mut detail = describe(&reports);
        if criterion == 1 {
            pass &= elapsed < Duration::from_secs(120);
            detail += &format!(", {:.1}s", elapsed.as_secs_f64());
        }
        all_pass &= pass;
        lines.push(format!("criterion {criterion:>2} {:<24} {} ({detail})", TITLES[criterion as usize - 1], if pass { "PASS" } else { "FAIL" }));
    }

    let dir = std::env::temp_dir().join(format!("calib-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (a, b) = (dir.join("first.jsonl"), dir.join("second.jsonl"));
    let (code_a, time_a) = run_all_to(&a);
    let (code_b, time_b) = run_all_to(&b);
    let same = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();
    let in_process = run_many(&scenarios_for(11), &cfg);
    let pass = same && code_a == 0 && code_b == 0 && time_a.max(time_b) < Duration::from_secs(600) && in_process.iter().all(|r| r.pass);
    all_pass &= pass;
    lines.push(format!(
        "criterion 11 {:<24} {} (identical reports: {same}, exit codes {code_a}/{code_b}, run-all {:.1}s)",
        TITLES[10],
        if pass { "PASS" } else { "FAIL" },
        time_a.max(time_b).as_secs_f64()
    ));
    let _ = std::fs::remove_dir_all(&dir);

    for l in &lines {
        println!("{l}");
    }
    if !all_pass {
        std::process::exit(1);
    }
}

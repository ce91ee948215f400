//! Scenario records and the human summary.

use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

use crate::config::Config;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Check {
    /// value ≤ tol
    AtMost { tol: f64 },
    /// value ≥ min
    AtLeast { min: f64 },
    /// |value − target| ≤ tol
    Near { target: f64, tol: f64 },
    /// lo ≤ value ≤ hi
    Within { lo: f64, hi: f64 },
}

impl Check {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Check::AtMost { tol } => v <= tol,
            Check::AtLeast { min } => v >= min,
            Check::Near { target, tol } => (v - target).abs() <= tol,
            Check::Within { lo, hi } => lo <= v && v <= hi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    #[serde(flatten)]
    pub check: Check,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub criterion: u8,
    pub pass: bool,
    pub seed: u64,
    pub measurements: Vec<Measurement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn failures(&self) -> impl Iterator<Item = &Measurement> {
        self.measurements.iter().filter(|m| !m.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub aggregate: bool,
    pub seed: u64,
    pub scenarios: usize,
    pub passed: usize,
    pub failed: Vec<String>,
}

impl Aggregate {
    pub fn new(seed: u64, reports: &[ScenarioReport]) -> Self {
        Aggregate {
            aggregate: true,
            seed,
            scenarios: reports.len(),
            passed: reports.iter().filter(|r| r.pass).count(),
            failed: reports.iter().filter(|r| !r.pass).map(|r| r.scenario.clone()).collect(),
        }
    }
}

/// Collects checks for one scenario and resolves tolerance overrides.
pub struct Recorder<'a> {
    scenario: &'a str,
    cfg: &'a Config,
    pub measurements: Vec<Measurement>,
}

impl<'a> Recorder<'a> {
    pub fn new(scenario: &'a str, cfg: &'a Config) -> Self {
        Recorder { scenario, cfg, measurements: Vec::new() }
    }

    /// Tolerance for a check: per-check key, then the global override.
    pub fn tol(&self, name: &str, default: f64) -> f64 {
        let key = format!("{}.{}", self.scenario, name);
        self.cfg.tolerances.get(&key).copied().or(self.cfg.tol).unwrap_or(default)
    }

    fn push(&mut self, name: &str, value: f64, check: Check) -> bool {
        let pass = check.holds(value);
        self.measurements.push(Measurement { name: name.to_string(), value, check, pass });
        pass
    }

    pub fn at_most(&mut self, name: &str, value: f64, tol: f64) -> bool {
        let tol = self.tol(name, tol);
        self.push(name, value, Check::AtMost { tol })
    }

    pub fn near(&mut self, name: &str, value: f64, target: f64, tol: f64) -> bool {
        let tol = self.tol(name, tol);
        self.push(name, value, Check::Near { target, tol })
    }

    /// Exact integer or structural count.
    pub fn count(&mut self, name: &str, value: usize, target: usize) -> bool {
        self.push(name, value as f64, Check::Near { target: target as f64, tol: 0.0 })
    }

    pub fn at_least(&mut self, name: &str, value: f64, min: f64) -> bool {
        self.push(name, value, Check::AtLeast { min })
    }

    pub fn within(&mut self, name: &str, value: f64, lo: f64, hi: f64) -> bool {
        self.push(name, value, Check::Within { lo, hi })
    }
}

pub fn summary_table(reports: &[ScenarioReport]) -> String {
    let width = reports.iter().map(|r| r.scenario.len()).max().unwrap_or(8).max(8);
    let mut s = String::new();
    let _ = writeln!(s, "{:<width$}  crit  status  checks   time", "scenario");
    for r in reports {
        let ok = r.measurements.iter().filter(|m| m.pass).count();
        let status = if r.pass { "pass" } else { "FAIL" };
        let _ = writeln!(
            s,
            "{:<width$}  {:>4}  {:<6}  {:>3}/{:<3} {:>6.2}s",
            r.scenario,
            r.criterion,
            status,
            ok,
            r.measurements.len(),
            r.elapsed.as_secs_f64()
        );
        if let Some(e) = &r.error {
            let _ = writeln!(s, "    error: {e}");
        }
        for m in r.failures() {
            let _ = writeln!(s, "    failed {} = {:e} ({:?})", m.name, m.value, m.check);
        }
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    let _ = writeln!(s, "{passed}/{} scenarios passed", reports.len());
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks() {
        assert!(Check::AtMost { tol: 1.0 }.holds(1.0));
        assert!(!Check::AtMost { tol: 1.0 }.holds(f64::NAN));
        assert!(Check::Near { target: 4.0, tol: 0.0 }.holds(4.0));
        assert!(!Check::Within { lo: 3.5, hi: 4.5 }.holds(4.6));
    }

    #[test]
    fn overrides_resolve_per_check_first() {
        let mut cfg = Config { tol: Some(0.5), ..Config::default() };
        cfg.tolerances.insert("s.a".into(), 0.1);
        let r = Recorder::new("s", &cfg);
        assert_eq!(r.tol("a", 9.0), 0.1);
        assert_eq!(r.tol("b", 9.0), 0.5);
    }

    #[test]
    fn record_shape() {
        let cfg = Config::default();
        let mut r = Recorder::new("s", &cfg);
        r.near("x", 1.0, 1.0, 1e-6);
        let j = serde_json::to_string(&r.measurements[0]).unwrap();
        assert_eq!(j, r#"{"name":"x","value":1.0,"check":"near","target":1.0,"tol":1e-6,"pass":true}"#);
    }
}

//! Run configuration: a TOML key-value file, overridden by flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid setting: {0}")]
    Invalid(String),
    #[error("unknown scenario `{name}`; registered scenarios:\n{available}")]
    UnknownScenario { name: String, available: String },
    #[error("{0}")]
    Preset(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Replaces every tolerance of every check when set.
    pub tol: Option<f64>,
    pub restarts: usize,
    /// Base step of the chart finite differences.
    pub fd_step: f64,
    /// Gradient norm at which a comass ascent stops.
    pub ascent_tol: f64,
    pub comass_samples: usize,
    pub candidate_points: usize,
    pub ellipticity_samples: usize,
    pub chart_count: usize,
    /// Per-check tolerance overrides keyed by `scenario.check`.
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            tol: None,
            restarts: 24,
            fd_step: 2e-2,
            ascent_tol: 1e-10,
            comass_samples: 1_000_000,
            candidate_points: 100,
            ellipticity_samples: 1000,
            chart_count: 20,
            tolerances: BTreeMap::new(),
        }
    }
}

/// Flag values; `None` keeps the file (or default) value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub restarts: Option<usize>,
    pub fd_step: Option<f64>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self, ConfigError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if o.tol.is_some() {
            self.tol = o.tol;
        }
        if let Some(r) = o.restarts {
            self.restarts = r;
        }
        if let Some(h) = o.fd_step {
            self.fd_step = h;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |what: &str| Err(ConfigError::Invalid(what.to_string()));
        if let Some(t) = self.tol {
            if !(t >= 0.0 && t.is_finite()) {
                return bad("tol must be a finite non-negative number");
            }
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.fd_step > 0.0 && self.fd_step < 0.5) {
            return bad("fd_step must lie in (0, 0.5)");
        }
        if !(self.ascent_tol > 0.0) {
            return bad("ascent_tol must be positive");
        }
        for (name, v) in [
            ("comass_samples", self.comass_samples),
            ("candidate_points", self.candidate_points),
            ("ellipticity_samples", self.ellipticity_samples),
            ("chart_count", self.chart_count),
        ] {
            if v == 0 {
                return bad(&format!("{name} must be at least 1"));
            }
        }
        for (k, v) in &self.tolerances {
            if !(*v >= 0.0 && v.is_finite()) {
                return bad(&format!("tolerance `{k}` must be a finite non-negative number"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let c = Config::from_toml("seed = 5\nrestarts = 3\n[tolerances]\n\"comass-g2.optimizer_max\" = 1e-3\n").unwrap();
        assert_eq!((c.seed, c.restarts), (5, 3));
        let c = c.apply(&Overrides { seed: Some(9), ..Default::default() }).unwrap();
        assert_eq!((c.seed, c.restarts), (9, 3));
        assert_eq!(c.tolerances["comass-g2.optimizer_max"], 1e-3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Config::from_toml("sed = 1"), Err(ConfigError::Parse(_))));
        assert!(matches!(Config::from_toml("restarts = 0"), Err(ConfigError::Invalid(_))));
        assert!(Config::default().apply(&Overrides { fd_step: Some(-1.0), ..Default::default() }).is_err());
    }
}

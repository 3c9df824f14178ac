//! TOML run configuration.
//!
//! ```toml
//! [scenario]
//! id = "narrow"
//! p = 50
//! sigma = 1.0
//! tau = 1.0                      # or one value per group
//! theta_values = [-2.0, 0.0]
//! alpha = 0.05
//! n_rep = 10000
//! seed = 1
//!
//! [scenario.eta]
//! kind = "gaussian-quantiles"    # or "mixture-quantiles", "explicit"
//! s0 = 0.5
//!
//! [experiment]
//! kind = "coverage"              # or "marginal", "power", "percentiles"
//! procedures = ["oracle", "gaussian-eb"]
//! t_values = []                  # power only
//! theta0 = 0.0                   # percentiles only
//! bayes_prior = [0.0, 1.0]       # (m, v) for "bayes"
//!
//! [output]
//! svg = true
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use selective_ci_core::HyperParams;

use crate::procedure::Procedure;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Coverage,
    /// Winner's coverage with `p + 1` unconditional groups whose means are
    /// the scenario's `η` layout resolved at `p + 1`.
    Marginal,
    Power,
    Percentiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub procedures: Vec<String>,
    #[serde(default)]
    pub t_values: Vec<f64>,
    #[serde(default)]
    pub theta0: f64,
    #[serde(default = "default_prior")]
    pub bayes_prior: [f64; 2],
}

fn default_prior() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "yes")]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { svg: true }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

/// Configurations shipped with the binary, addressable by name.
pub const BUNDLED: [(&str, &str); 8] = [
    ("fig1-power", include_str!("../configs/fig1-power.toml")),
    ("fig1-percentiles", include_str!("../configs/fig1-percentiles.toml")),
    ("fig2-power-narrow", include_str!("../configs/fig2-power-narrow.toml")),
    (
        "fig3-gaussian-narrow",
        include_str!("../configs/fig3-gaussian-narrow.toml"),
    ),
    ("fig3-gaussian-wide", include_str!("../configs/fig3-gaussian-wide.toml")),
    ("fig3-mixture", include_str!("../configs/fig3-mixture.toml")),
    ("fig3-marginal", include_str!("../configs/fig3-marginal.toml")),
    ("smoke", include_str!("../configs/smoke.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Largest replication count under `--fast`.
pub const FAST_REPS: usize = 100;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// A file path, or the name of a bundled configuration.
    pub fn load(spec: &str) -> Result<Self, ConfigError> {
        let path = Path::new(spec);
        if !path.exists() {
            if let Some(text) = bundled(spec) {
                return Self::parse(text);
            }
        }
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: spec.to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Every schema violation, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if let Err(e) = self.scenario.validate() {
            problems.push(e.to_string());
        }
        let e = &self.experiment;
        if e.procedures.is_empty() {
            problems.push("experiment.procedures must not be empty".into());
        }
        for name in &e.procedures {
            match name.parse::<Procedure>() {
                Err(err) => problems.push(err.to_string()),
                Ok(p) => {
                    let estimator = p.estimator(&[]).is_some();
                    if matches!(e.kind, ExperimentKind::Power | ExperimentKind::Percentiles) && !estimator {
                        problems.push(format!(
                            "{name} has no eta estimator and cannot be used in a {:?} experiment",
                            e.kind
                        ));
                    }
                }
            }
        }
        let needs_theta = !matches!(e.kind, ExperimentKind::Marginal);
        if needs_theta && self.scenario.theta_values.is_empty() {
            problems.push("scenario.theta_values must not be empty".into());
        }
        if e.kind == ExperimentKind::Power && e.t_values.is_empty() {
            problems.push("experiment.t_values must not be empty for a power experiment".into());
        }
        if e.kind != ExperimentKind::Power && !e.t_values.is_empty() {
            problems.push("experiment.t_values is only used by power experiments".into());
        }
        if e.t_values.iter().chain([&e.theta0]).any(|t| !t.is_finite()) {
            problems.push("t_values and theta0 must be finite".into());
        }
        if !(e.bayes_prior[1] > 0.0) || HyperParams::new(e.bayes_prior[0], e.bayes_prior[1]).is_err() {
            problems.push("experiment.bayes_prior must be [m, v] with v > 0".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    pub fn procedures(&self) -> Vec<Procedure> {
        let [m, v] = self.experiment.bayes_prior;
        self.experiment
            .procedures
            .iter()
            .map(|n| {
                n.parse::<Procedure>()
                    .expect("validated")
                    .with_bayes_prior(HyperParams { m, v })
            })
            .collect()
    }

    pub fn apply_overrides(&mut self, seed: Option<u64>, alpha: Option<f64>, fast: bool) -> Result<(), ConfigError> {
        if let Some(s) = seed {
            self.scenario.seed = s;
        }
        if let Some(a) = alpha {
            self.scenario.alpha = a;
        }
        if fast {
            self.scenario.n_rep = self.scenario.n_rep.min(FAST_REPS);
        }
        self.validate()
    }
}

use serde::{Deserialize, Serialize};

use selective_ci_core::gauss::{self, std_normal_quantile};
use selective_ci_core::roots::{bracket_decreasing, brent};
use selective_ci_core::{Error, SelectiveModel};

/// How the unselected means are laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EtaSpec {
    /// `η_j = s0 Φ⁻¹((j − 0.5)/p)`.
    GaussianQuantiles {
        s0: f64,
    },
    /// Quantiles `(j − 0.5)/p` of a finite normal mixture.
    MixtureQuantiles {
        weights: Vec<f64>,
        means: Vec<f64>,
        scales: Vec<f64>,
    },
    Explicit {
        values: Vec<f64>,
    },
}

/// A common scale or one scale per unselected group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauSpec {
    Common(f64),
    PerGroup(Vec<f64>),
}

impl TauSpec {
    pub fn resolve(&self, p: usize) -> Result<Vec<f64>, Error> {
        let tau = match self {
            Self::Common(t) => vec![*t; p],
            Self::PerGroup(v) if v.len() == p => v.clone(),
            Self::PerGroup(v) => {
                return Err(domain(format!("tau has {} entries, expected {p}", v.len())));
            }
        };
        if tau.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(domain("tau must be positive and finite".into()));
        }
        Ok(tau)
    }
}

fn domain(reason: String) -> Error {
    Error::Domain {
        what: "scenario",
        reason,
    }
}

pub fn resolve_eta(spec: &EtaSpec, p: usize) -> Result<Vec<f64>, Error> {
    let u = |j: usize| (j as f64 - 0.5) / p as f64;
    match spec {
        EtaSpec::GaussianQuantiles { s0 } => {
            if !(*s0 >= 0.0 && s0.is_finite()) {
                return Err(domain(format!("s0 must be finite and ≥ 0, got {s0}")));
            }
            (1..=p).map(|j| Ok(s0 * std_normal_quantile(u(j))?)).collect()
        }
        EtaSpec::MixtureQuantiles { weights, means, scales } => {
            let k = weights.len();
            if k == 0 || means.len() != k || scales.len() != k {
                return Err(domain(
                    "mixture weights, means and scales must be non-empty and of equal length".into(),
                ));
            }
            if weights.iter().any(|w| !(*w > 0.0)) || scales.iter().any(|s| !(*s > 0.0)) {
                return Err(domain("mixture weights and scales must be positive".into()));
            }
            let total: f64 = weights.iter().sum();
            let cdf = |t: f64| -> f64 {
                weights
                    .iter()
                    .zip(means)
                    .zip(scales)
                    .map(|((w, m), s)| w * gauss::cdf((t - m) / s))
                    .sum::<f64>()
                    / total
            };
            let centre = means.iter().zip(weights).map(|(m, w)| m * w).sum::<f64>() / total;
            (1..=p)
                .map(|j| {
                    let target = u(j);
                    let f = |t: f64| Ok(target - cdf(t));
                    let (a, b) = bracket_decreasing(f, centre - 1.0, centre + 1.0, 200, "mixture quantile")?;
                    brent(f, a, b, 1e-13, 300)
                })
                .collect()
        }
        EtaSpec::Explicit { values } => {
            if values.len() != p {
                return Err(domain(format!(
                    "explicit eta has {} values, expected {p}",
                    values.len()
                )));
            }
            Ok(values.clone())
        }
    }
}

/// Everything needed to draw selective data sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub p: usize,
    pub sigma: f64,
    pub tau: TauSpec,
    pub eta: EtaSpec,
    #[serde(default)]
    pub theta_values: Vec<f64>,
    pub alpha: f64,
    pub n_rep: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), Error> {
        if self.p == 0 {
            return Err(domain("p must be ≥ 1".into()));
        }
        if self.n_rep == 0 {
            return Err(domain("n_rep must be ≥ 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(domain("sigma must be positive and finite".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.theta_values.iter().any(|t| !t.is_finite()) {
            return Err(domain("theta values must be finite".into()));
        }
        self.model().map(|_| ())
    }

    pub fn eta(&self) -> Result<Vec<f64>, Error> {
        resolve_eta(&self.eta, self.p)
    }

    pub fn tau(&self) -> Result<Vec<f64>, Error> {
        self.tau.resolve(self.p)
    }

    pub fn model(&self) -> Result<SelectiveModel, Error> {
        SelectiveModel::new(self.eta()?, self.tau()?, self.sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_first_quantile() {
        let eta = resolve_eta(&EtaSpec::GaussianQuantiles { s0: 0.5 }, 50).unwrap();
        assert!((eta[0] + 1.163_174).abs() < 1e-6, "{}", eta[0]);
        assert!((eta[0] + eta[49]).abs() < 1e-12);
    }

    #[test]
    fn mixture_quantiles_invert_the_cdf() {
        let spec = EtaSpec::MixtureQuantiles {
            weights: vec![0.75, 0.25],
            means: vec![0.0, 3.0],
            scales: vec![0.5, 0.5],
        };
        let eta = resolve_eta(&spec, 50).unwrap();
        assert!(eta.windows(2).all(|w| w[1] > w[0]));
        let mean = eta.iter().sum::<f64>() / 50.0;
        let var = eta.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / 50.0;
        // 0.75·0.25·3² + 0.5² = 1.9375 ≈ 1.4²
        assert!((var - 1.96).abs() < 0.1, "{var}");
    }
}

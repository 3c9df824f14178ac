use std::fmt;
use std::str::FromStr;

use rand::Rng;

use selective_ci_core::procedures::{self, default_hybrid_beta};
use selective_ci_core::{EtaEstimator, HyperParams, Interval, Level, SelectedDatum, SelectiveMargin};

/// A confidence procedure for the selected mean.
#[derive(Debug, Clone, PartialEq)]
pub enum Procedure {
    Unadjusted,
    Bonferroni,
    Hybrid,
    /// Conditional quantile interval given `X = x`.
    Conditional,
    /// Plug-in interval with the true `η`.
    Oracle,
    /// Plug-in interval with an estimated `η`.
    Plugin(EtaEstimator),
}

pub const ALL_NAMES: [&str; 10] = [
    "unadjusted",
    "bonferroni",
    "hybrid",
    "conditional",
    "oracle",
    "profile",
    "conditional-mle",
    "bayes",
    "gaussian-eb",
    "np-eb",
];

impl Procedure {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Unadjusted => "unadjusted",
            Self::Bonferroni => "bonferroni",
            Self::Hybrid => "hybrid",
            Self::Conditional => "conditional",
            Self::Oracle => "oracle",
            Self::Plugin(EtaEstimator::Conditional) => "conditional-mle",
            Self::Plugin(e) => e.name(),
        }
    }

    /// Stable per-kind RNG tag, so adding a procedure to a list does not
    /// change the draws seen by the others.
    pub fn tag(&self) -> u64 {
        ALL_NAMES
            .iter()
            .position(|n| *n == self.name())
            .map_or(99, |i| i as u64 + 1)
    }

    pub fn needs_truth(&self) -> bool {
        matches!(self, Self::Oracle)
    }

    /// The interval for `datum`. `truth` supplies the node cache for the
    /// oracle; it is ignored by the other procedures.
    pub fn interval<R: Rng + ?Sized>(
        &self,
        datum: &SelectedDatum,
        tau: &[f64],
        sigma: f64,
        level: Level,
        truth: Option<&SelectiveMargin>,
        rng: &mut R,
    ) -> selective_ci_core::Result<Interval> {
        let p = datum.p();
        match self {
            Self::Unadjusted => procedures::unadjusted(datum.y, sigma, level),
            Self::Bonferroni => procedures::bonferroni(datum.y, sigma, level, p),
            Self::Hybrid => procedures::hybrid(datum, sigma, level, default_hybrid_beta(level), p),
            Self::Conditional => procedures::conditional_quantile(datum, sigma, level),
            Self::Oracle => match truth {
                Some(m) => procedures::oracle_with_margin(m, datum.y, level),
                None => Err(selective_ci_core::Error::Domain {
                    what: "oracle",
                    reason: "the true eta is unknown".into(),
                }),
            },
            Self::Plugin(e) => procedures::adaptive(datum, tau, sigma, level, e, rng),
        }
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown procedure {0:?} (expected one of: {list})", list = ALL_NAMES.join(", "))]
pub struct UnknownProcedure(pub String);

impl FromStr for Procedure {
    type Err = UnknownProcedure;

    /// Names as in [`ALL_NAMES`]. `bayes` uses a `N(0, 1)` prior; see
    /// [`Procedure::with_bayes_prior`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "unadjusted" => Self::Unadjusted,
            "bonferroni" => Self::Bonferroni,
            "hybrid" => Self::Hybrid,
            "conditional" => Self::Conditional,
            "oracle" => Self::Oracle,
            "profile" => Self::Plugin(EtaEstimator::Profile),
            "conditional-mle" => Self::Plugin(EtaEstimator::Conditional),
            "bayes" => Self::Plugin(EtaEstimator::Bayes(HyperParams { m: 0.0, v: 1.0 })),
            "gaussian-eb" => Self::Plugin(EtaEstimator::GaussianEb),
            "np-eb" => Self::Plugin(EtaEstimator::np_eb_default()),
            other => return Err(UnknownProcedure(other.to_string())),
        })
    }
}

impl Procedure {
    pub fn with_bayes_prior(self, prior: HyperParams) -> Self {
        match self {
            Self::Plugin(EtaEstimator::Bayes(_)) => Self::Plugin(EtaEstimator::Bayes(prior)),
            other => other,
        }
    }

    /// The estimator behind a test of `θ₀`; `truth` is used for the oracle.
    pub fn estimator(&self, truth: &[f64]) -> Option<EtaEstimator> {
        match self {
            Self::Oracle => Some(EtaEstimator::Fixed(truth.to_vec())),
            Self::Plugin(e) => Some(e.clone()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in ALL_NAMES {
            assert_eq!(n.parse::<Procedure>().unwrap().name(), n);
        }
        assert!("bonf".parse::<Procedure>().is_err());
    }

    #[test]
    fn tags_are_distinct() {
        let mut tags: Vec<u64> = ALL_NAMES
            .iter()
            .map(|n| n.parse::<Procedure>().unwrap().tag())
            .collect();
        tags.sort();
        tags.dedup();
        assert_eq!(tags.len(), ALL_NAMES.len());
    }
}

//! Confidence intervals for the mean `θ` of the selected group.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::estimators::EtaEstimator;
use crate::gauss::{self, TruncatedNormal};
use crate::model::{SelectedDatum, SelectiveMargin, SelectiveModel};
use crate::roots::{bracket_decreasing, brent};

/// Endpoints closer than this (relative to their scale) collapse to a point.
pub const TIE_TOL: f64 = 1e-8;

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() {
            return Err(domain("Interval", "NaN endpoint"));
        }
        let tol = TIE_TOL * (1.0 + lower.abs().max(upper.abs()));
        if lower > upper {
            if lower - upper <= tol {
                let mid = 0.5 * (lower + upper);
                return Ok(Self { lower: mid, upper: mid });
            }
            return Err(domain(
                "Interval",
                alloc::format!("lower {lower} exceeds upper {upper}"),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }

    pub fn shifted(&self, d: f64) -> Self {
        Self {
            lower: self.lower + d,
            upper: self.upper + d,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lower.max(other.lower);
        let hi = self.upper.min(other.upper);
        (lo <= hi).then_some(Interval { lower: lo, upper: hi })
    }
}

/// Miscoverage level `α ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Level(f64);

impl Level {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(domain("Level", alloc::format!("alpha must lie in (0, 1), got {alpha}")))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(domain("sigma", "must be positive and finite"))
    }
}

fn check_y(y: f64) -> Result<()> {
    if y.is_finite() {
        Ok(())
    } else {
        Err(domain("y", "must be finite"))
    }
}

/// `y ± σ Φ⁻¹(1 − α/2)`.
pub fn unadjusted(y: f64, sigma: f64, level: Level) -> Result<Interval> {
    check_sigma(sigma)?;
    check_y(y)?;
    let h = sigma * gauss::quantile_from_log_sf(libm::log(0.5 * level.alpha()));
    Interval::new(y - h, y + h)
}

/// Half-width multiplier `Φ⁻¹(1 − α/(2p))`.
pub fn bonferroni_multiplier(alpha: f64, p: usize) -> Result<f64> {
    if p == 0 {
        return Err(domain("bonferroni", "p must be ≥ 1"));
    }
    Level::new(alpha)?;
    Ok(gauss::quantile_from_log_sf(libm::log(alpha / (2.0 * p as f64))))
}

/// `y ± σ Φ⁻¹(1 − α/(2p))`, with `p` the number of unselected groups.
pub fn bonferroni(y: f64, sigma: f64, level: Level, p: usize) -> Result<Interval> {
    check_sigma(sigma)?;
    check_y(y)?;
    let h = sigma * bonferroni_multiplier(level.alpha(), p)?;
    Interval::new(y - h, y + h)
}

/// Inverts the law of `Y` given `Y > max x`, `N(θ, σ²)` truncated to
/// `(x_max, ∞)`.
pub fn conditional_quantile(datum: &SelectedDatum, sigma: f64, level: Level) -> Result<Interval> {
    check_sigma(sigma)?;
    check_y(datum.y)?;
    let y = datum.y;
    let x_max = datum.x_max();
    // ln P(Y > y | Y > x_max, θ), increasing in θ
    let log_sf = |theta: f64| gauss::log_sf_ratio((y - theta) / sigma, (x_max - theta) / sigma);
    let solve = |target: f64| -> Result<f64> {
        let lt = libm::log(target);
        let f = |theta: f64| Ok(lt - log_sf(theta));
        let (a, b) = bracket_decreasing(
            f,
            y - 6.0 * sigma,
            y + 6.0 * sigma,
            200,
            "conditional quantile interval",
        )?;
        brent(f, a, b, 1e-11 * sigma, 300)
    };
    let alpha = level.alpha();
    let lo = solve(0.5 * alpha)?;
    let hi = solve(1.0 - 0.5 * alpha)?;
    Interval::new(lo, hi)
}

/// `{θ : l(θ, η) < y < u(θ, η)}` for a known `η`.
pub fn oracle(model: &SelectiveModel, y: f64, level: Level) -> Result<Interval> {
    oracle_with_margin(&model.margin(), y, level)
}

/// As [`oracle`], reusing the node cache held by `margin`.
pub fn oracle_with_margin(margin: &SelectiveMargin, y: f64, level: Level) -> Result<Interval> {
    check_y(y)?;
    let alpha = level.alpha();
    let lo = margin.solve_theta(y, 1.0 - 0.5 * alpha)?;
    let hi = margin.solve_theta(y, 0.5 * alpha)?;
    if lo > hi + TIE_TOL * (1.0 + y.abs()) {
        return Err(Error::Monotonicity {
            what: "oracle interval",
            at: y,
            detail: alloc::format!("lower root {lo} exceeds upper root {hi}"),
        });
    }
    Interval::new(lo, hi)
}

/// Whether `θ₀` is accepted by the equal-tailed test built from `η`.
pub fn accepts(model: &SelectiveModel, theta0: f64, y: f64, level: Level) -> Result<bool> {
    let f = model.marginal_cdf(theta0, y)?;
    let a = 0.5 * level.alpha();
    Ok(f > a && f < 1.0 - a)
}

/// Grid step and half-span, in units of `σ`, of the `θ₀` scan used for
/// estimators that depend on `θ₀`.
pub const PROFILE_GRID_STEP: f64 = 1.0 / 50.0;
pub const PROFILE_GRID_PAD: f64 = 10.0;

/// Plug-in interval: the oracle with `η` replaced by an estimate.
///
/// When the estimate depends on `θ₀`, the acceptance region is evaluated on
/// a grid over `[x_max − 10σ, y + 10σ]` and the convex hull of the accepted
/// points is returned.
pub fn adaptive<R: Rng + ?Sized>(
    datum: &SelectedDatum,
    tau: &[f64],
    sigma: f64,
    level: Level,
    estimator: &EtaEstimator,
    rng: &mut R,
) -> Result<Interval> {
    check_sigma(sigma)?;
    check_y(datum.y)?;
    if !estimator.depends_on_theta() {
        let eta = estimator.estimate(datum, tau, sigma, datum.y, rng)?;
        let model = SelectiveModel::new(eta, tau.to_vec(), sigma)?;
        return oracle(&model, datum.y, level);
    }
    let grid = profile_grid(datum, sigma);
    let mut accepted: Option<(f64, f64)> = None;
    for &t in &grid {
        let eta = estimator.estimate(datum, tau, sigma, t, rng)?;
        let model = SelectiveModel::new(eta, tau.to_vec(), sigma)?;
        if accepts(&model, t, datum.y, level)? {
            accepted = Some(match accepted {
                None => (t, t),
                Some((a, _)) => (a, t),
            });
        }
    }
    match accepted {
        Some((a, b)) => Interval::new(a, b),
        None => Err(Error::Bracketing {
            what: "adaptive interval (no accepted grid point)",
            expansions: 0,
            lo: grid[0],
            hi: grid[grid.len() - 1],
        }),
    }
}

/// `θ₀` grid for the profile-MLE inversion.
pub fn profile_grid(datum: &SelectedDatum, sigma: f64) -> Vec<f64> {
    let x_max = if datum.x.is_empty() { datum.y } else { datum.x_max() };
    let a = x_max - PROFILE_GRID_PAD * sigma;
    let b = datum.y + PROFILE_GRID_PAD * sigma;
    let step = PROFILE_GRID_STEP * sigma;
    let n = libm::ceil((b - a) / step) as usize;
    (0..=n).map(|i| a + i as f64 * step).collect()
}

/// Default `β = 0.1 α` for the hybrid interval.
pub fn default_hybrid_beta(level: Level) -> f64 {
    0.1 * level.alpha()
}

/// Conditional interval restricted to the relaxed Bonferroni projection
/// `y ± kσ`, `k = Φ⁻¹(1 − β/(2p))`.
///
/// Each `θ₀` is tested with `N(θ₀, σ²)` truncated to
/// `(max(x_max, θ₀ − kσ), θ₀ + kσ]` at level `(α − β)/(1 − β)`; the
/// resulting set lies inside `y ± kσ`.
pub fn hybrid(datum: &SelectedDatum, sigma: f64, level: Level, beta: f64, p: usize) -> Result<Interval> {
    check_sigma(sigma)?;
    check_y(datum.y)?;
    let alpha = level.alpha();
    if !(beta > 0.0 && beta < alpha) {
        return Err(domain(
            "hybrid",
            alloc::format!("need 0 < beta < alpha, got beta = {beta}"),
        ));
    }
    let k = bonferroni_multiplier(beta, p)?;
    let a_h = (alpha - beta) / (1.0 - beta);
    let y = datum.y;
    let x_max = datum.x_max();
    let cdf = |theta0: f64| -> Result<f64> {
        let hi = theta0 + k * sigma;
        if y >= hi {
            return Ok(1.0);
        }
        let lo = x_max.max(theta0 - k * sigma);
        if y <= lo {
            return Ok(0.0);
        }
        Ok(TruncatedNormal::new(theta0, sigma, lo, hi)?.cdf(y))
    };
    let (a, b) = (y - k * sigma, y + k * sigma);
    let lo = brent(|t| Ok(cdf(t)? - (1.0 - 0.5 * a_h)), a, b, 1e-11 * sigma, 300)?;
    let hi = brent(|t| Ok(cdf(t)? - 0.5 * a_h), a, b, 1e-11 * sigma, 300)?;
    let out = Interval::new(lo.min(hi), hi.max(lo))?;
    Ok(out.intersect(&Interval { lower: a, upper: b }).unwrap_or(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_ties_collapse() {
        let i = Interval::new(1.0 + 1e-10, 1.0).unwrap();
        assert_eq!(i.width(), 0.0);
        assert!(Interval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn unadjusted_reference() {
        let i = unadjusted(0.0, 1.0, Level::new(0.05).unwrap()).unwrap();
        assert!((i.upper - 1.959_963_984_540_054).abs() < 1e-12);
    }
}

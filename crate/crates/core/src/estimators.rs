//! Plug-in estimates of the nuisance means `η`.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, log, sqrt};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::gauss;
use crate::model::{SelectedDatum, SelectiveModel};
use crate::optim::{bfgs, BfgsOptions};
use crate::quad::trapezoid;
use crate::roots::newton_decreasing;

/// Prior `N(m, v)` on each `η_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub m: f64,
    pub v: f64,
}

impl HyperParams {
    pub fn new(m: f64, v: f64) -> Result<Self> {
        if !m.is_finite() || !(v >= 0.0) || !v.is_finite() {
            return Err(domain(
                "HyperParams",
                alloc::format!("need finite m and v ≥ 0, got ({m}, {v})"),
            ));
        }
        Ok(Self { m, v })
    }

    /// Shrinkage weight `v/(v + τ²)` on the observation.
    pub fn rho(&self, tau: f64) -> f64 {
        self.v / (self.v + tau * tau)
    }
}

fn check_scales(what: &'static str, x: &[f64], tau: &[f64]) -> Result<()> {
    if x.len() != tau.len() {
        return Err(domain(what, "x and tau differ in length"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(domain(what, "x must be finite"));
    }
    if tau.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(domain(what, "tau must be positive and finite"));
    }
    Ok(())
}

fn check_selection(what: &'static str, x: &[f64], y: f64) -> Result<()> {
    let x_max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if y.is_nan() || !(x_max < y) {
        return Err(Error::SelectionNotSatisfied { x_max, y });
    }
    let _ = what;
    Ok(())
}

/// Maximiser of the selective likelihood of `x` at a hypothesised `θ₀`.
///
/// The objective is `Σ_j ln φ((x_j − η_j)/τ_j) − ln c(η, θ₀)`, which is
/// concave in `η`.
pub fn profile_mle(x: &[f64], theta0: f64, tau: &[f64], sigma: f64) -> Result<Vec<f64>> {
    check_scales("profile_mle", x, tau)?;
    if !theta0.is_finite() {
        return Err(domain("profile_mle", "theta0 must be finite"));
    }
    let p = x.len();
    let objective = |eta: &[f64], grad: &mut [f64]| -> Result<f64> {
        let model = SelectiveModel::new(eta.to_vec(), tau.to_vec(), sigma)?;
        let (log_c, nodes) = model.margin_nodes(theta0)?;
        let mut f = log_c;
        for j in 0..p {
            let r = (x[j] - eta[j]) / tau[j];
            f += 0.5 * r * r;
            let mut e_lambda = 0.0;
            for (t, w) in &nodes {
                e_lambda += w * gauss::inv_mills_lower((t - eta[j]) / tau[j]);
            }
            grad[j] = -(x[j] - eta[j]) / (tau[j] * tau[j]) - e_lambda / tau[j];
        }
        Ok(f)
    };
    let opts = BfgsOptions {
        grad_tol: 1e-7,
        max_iter: 1000,
    };
    Ok(bfgs(objective, x, opts)?.x)
}

/// Root of a decreasing score `g` starting from a point `lo` with
/// `g(lo) ≥ 0`.
fn score_root<F: FnMut(f64) -> (f64, f64)>(mut fdf: F, lo: f64, scale: f64) -> Result<f64> {
    let (g0, _) = fdf(lo);
    if g0 <= 0.0 {
        return Ok(lo);
    }
    let mut step = scale;
    let mut hi = lo + step;
    let mut n = 0;
    while fdf(hi).0 > 0.0 {
        step *= 2.0;
        hi = lo + step;
        n += 1;
        if n > 200 {
            return Err(Error::Bracketing {
                what: "score root",
                expansions: n,
                lo,
                hi,
            });
        }
    }
    newton_decreasing(fdf, lo, hi, lo + 0.5 * (hi - lo), 1e-14, 500)
}

/// Score and curvature of one coordinate of the upper-truncated normal
/// likelihood `φ((x − η)/τ)/(τ Φ((y − η)/τ))` in `η`.
#[inline]
fn truncated_score(x: f64, y: f64, tau: f64, eta: f64) -> (f64, f64) {
    let t2 = tau * tau;
    if y == f64::INFINITY {
        return ((x - eta) / t2, -1.0 / t2);
    }
    let z = (y - eta) / tau;
    let l = gauss::inv_mills_lower(z);
    ((x - eta) / t2 + l / tau, (-1.0 + l * (z + l)) / t2)
}

/// Coordinatewise maximiser of the likelihood of `x` given selection and
/// `Y = y`. `y` may be `+∞`.
pub fn conditional_mle(x: &[f64], y: f64, tau: &[f64]) -> Result<Vec<f64>> {
    check_scales("conditional_mle", x, tau)?;
    check_selection("conditional_mle", x, y)?;
    x.iter()
        .zip(tau)
        .map(|(&xj, &tj)| {
            let gap = if y.is_finite() { (y - xj) / tj } else { 1.0 };
            score_root(|e| truncated_score(xj, y, tj, e), xj, tj * (1.0 + 1.0 / gap))
        })
        .collect()
}

/// Coordinatewise posterior mode under a `N(m, v)` prior.
pub fn bayes_mode(x: &[f64], y: f64, tau: &[f64], prior: HyperParams) -> Result<Vec<f64>> {
    check_scales("bayes_mode", x, tau)?;
    check_selection("bayes_mode", x, y)?;
    if !(prior.v > 0.0) {
        return Err(domain("bayes_mode", "prior variance must be > 0"));
    }
    x.iter()
        .zip(tau)
        .map(|(&xj, &tj)| {
            let lo = xj.min(prior.m);
            let gap = if y.is_finite() {
                ((y - lo) / tj).max(1e-300)
            } else {
                1.0
            };
            score_root(
                |e| {
                    let (g, h) = truncated_score(xj, y, tj, e);
                    (g + (prior.m - e) / prior.v, h - 1.0 / prior.v)
                },
                lo,
                tj * (1.0 + 1.0 / gap) + (xj - prior.m).abs(),
            )
        })
        .collect()
}

/// Negative penalised log marginal likelihood of `(m, ω = ln v)` and its
/// gradient.
fn eb_objective(x: &[f64], y: f64, tau: &[f64], m: f64, omega: f64, grad: &mut [f64]) -> f64 {
    let v = exp(omega);
    let mut f = 0.0;
    let mut dm = 0.0;
    let mut dv = 0.0;
    for (&xj, &tj) in x.iter().zip(tau) {
        let s2 = v + tj * tj;
        let s = sqrt(s2);
        let r = (xj - m) / s;
        f += -0.5 * r * r - 0.5 * log(s2);
        dm += r / s;
        let mut tv = r * r - 1.0;
        if y.is_finite() {
            let z = (y - m) / s;
            let l = gauss::inv_mills_lower(z);
            f -= gauss::log_cdf(z);
            dm += l / s;
            tv += l * z;
        }
        dv += tv / (2.0 * s2);
    }
    // half-Cauchy prior on √v, expressed as a density in ω = ln v
    f += 0.5 * omega - log(1.0 + v);
    let d_omega = dv * v + 0.5 - v / (1.0 + v);
    grad[0] = -dm;
    grad[1] = -d_omega;
    -f
}

/// Selection-adjusted Gaussian empirical Bayes fit of `(m, v)`.
pub fn gaussian_eb_fit(x: &[f64], y: f64, tau: &[f64]) -> Result<HyperParams> {
    check_scales("gaussian_eb_fit", x, tau)?;
    check_selection("gaussian_eb_fit", x, y)?;
    let p = x.len();
    if p == 1 {
        log::warn!("gaussian_eb_fit: p = 1, hyperparameters are weakly identified");
    }
    let mean = x.iter().sum::<f64>() / p as f64;
    let var = if p > 1 {
        x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (p - 1) as f64
    } else {
        0.0
    };
    let mean_t2 = tau.iter().map(|t| t * t).sum::<f64>() / p as f64;
    let v0 = (var - mean_t2).max(0.01);
    let opts = BfgsOptions {
        grad_tol: 1e-7,
        max_iter: 2000,
    };
    let min = bfgs(
        |z, g| {
            if !(z[1] < 700.0 && z[1] > -700.0) {
                return Ok(f64::INFINITY);
            }
            Ok(eb_objective(x, y, tau, z[0], z[1], g))
        },
        &[mean, log(v0)],
        opts,
    )?;
    HyperParams::new(min.x[0], exp(min.x[1]))
}

/// Linear shrinkage `η̂_j = ρ_j x_j + (1 − ρ_j) m`.
pub fn gaussian_eb_estimate(x: &[f64], h: HyperParams, tau: &[f64]) -> Result<Vec<f64>> {
    check_scales("gaussian_eb_estimate", x, tau)?;
    Ok(x.iter()
        .zip(tau)
        .map(|(&xj, &tj)| {
            if h.v == f64::INFINITY {
                xj
            } else {
                let r = h.rho(tj);
                r * xj + (1.0 - r) * h.m
            }
        })
        .collect())
}

/// A density tabulated on an increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingDensity {
    grid: Vec<f64>,
    density: Vec<f64>,
}

impl MixingDensity {
    /// Normalises `density` by the trapezoid rule.
    pub fn new(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != density.len() {
            return Err(domain(
                "MixingDensity",
                "need at least two grid points and matching lengths",
            ));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
            return Err(domain("MixingDensity", "grid must be finite and strictly increasing"));
        }
        if density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(domain("MixingDensity", "density must be finite and non-negative"));
        }
        let z = trapezoid(&grid, &density);
        if !(z > 0.0) {
            return Err(domain("MixingDensity", "density has zero mass"));
        }
        let density = density.into_iter().map(|d| d / z).collect();
        Ok(Self { grid, density })
    }

    /// Uniform density on `grid`.
    pub fn uniform(grid: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![1.0; n])
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    /// Mass of `[a, b]` by the trapezoid rule on the grid points inside it.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let w: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.density)
            .map(|(g, d)| if *g >= a && *g <= b { *d } else { 0.0 })
            .collect();
        trapezoid(&self.grid, &w)
    }

    pub fn mean(&self) -> f64 {
        let w: Vec<f64> = self.grid.iter().zip(&self.density).map(|(g, d)| g * d).collect();
        trapezoid(&self.grid, &w)
    }
}

/// Grid of `n` equispaced points on `[min x − 4τ, max(y, max x) + 4τ]`;
/// an infinite `y` is replaced by `max x`.
pub fn default_pr_grid(x: &[f64], y: f64, tau: f64, n: usize) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(domain("default_pr_grid", "need at least one observation"));
    }
    if n < 2 {
        return Err(domain("default_pr_grid", "need at least two grid points"));
    }
    let x_min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top = if y.is_finite() { y.max(x_max) } else { x_max };
    let (a, b) = (x_min - 4.0 * tau, top + 4.0 * tau);
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

/// Default weight sequence `w_j = (1 + j)^(−2/3)`, `j = 1, 2, …`.
pub fn default_pr_weights(p: usize) -> Vec<f64> {
    (1..=p).map(|j| libm::pow(1.0 + j as f64, -2.0 / 3.0)).collect()
}

/// `ln κ(x | η)`: the `N(η, τ²)` density restricted to `(−∞, y)`.
#[inline]
fn log_kappa(x: f64, eta: f64, tau: f64, y: f64) -> f64 {
    let lp = gauss::log_pdf((x - eta) / tau) - log(tau);
    if y.is_finite() {
        lp - gauss::log_cdf((y - eta) / tau)
    } else {
        lp
    }
}

/// Predictive recursion estimate of the selection-adjusted prior density,
/// averaged over `n_perm` random orderings of `x`. Homogeneous `τ` only.
pub fn predictive_recursion<R: Rng + ?Sized>(
    x: &[f64],
    y: f64,
    tau: f64,
    grid: &[f64],
    weights: &[f64],
    n_perm: usize,
    rng: &mut R,
) -> Result<MixingDensity> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(domain("predictive_recursion", "tau must be positive and finite"));
    }
    if weights.len() < x.len() || weights.iter().any(|w| !(*w >= 0.0 && *w < 1.0)) {
        return Err(domain(
            "predictive_recursion",
            "need one weight in [0, 1) per observation",
        ));
    }
    if !x.is_empty() {
        check_selection("predictive_recursion", x, y)?;
    }
    let g0 = MixingDensity::uniform(grid.to_vec())?;
    if x.is_empty() || n_perm == 0 {
        return Ok(g0);
    }
    let n = grid.len();
    // kernel rows scaled by their maximum; the update is invariant to that
    let kernel: Vec<Vec<f64>> = x
        .iter()
        .map(|&xj| {
            let lk: Vec<f64> = grid.iter().map(|&e| log_kappa(xj, e, tau, y)).collect();
            let top = lk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            lk.into_iter().map(|v| exp(v - top)).collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut avg = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut prod = vec![0.0; n];
    for _ in 0..n_perm {
        order.shuffle(rng);
        g.copy_from_slice(g0.density());
        for (step, &j) in order.iter().enumerate() {
            let w = weights[step];
            if w == 0.0 {
                continue;
            }
            for ((p, k), gv) in prod.iter_mut().zip(&kernel[j]).zip(&g) {
                *p = k * gv;
            }
            let z = trapezoid(grid, &prod);
            if !(z > 0.0) {
                return Err(Error::Quadrature {
                    what: "predictive_recursion",
                    panels: n,
                    reason: "kernel has no overlap with the current density",
                });
            }
            for (gv, p) in g.iter_mut().zip(&prod) {
                *gv = (1.0 - w) * *gv + w * p / z;
            }
        }
        for (a, gv) in avg.iter_mut().zip(&g) {
            *a += gv;
        }
    }
    let out = MixingDensity::new(grid.to_vec(), avg)?;
    let edge = out.mass_between(f64::NEG_INFINITY, grid[0] + tau) + out.mass_between(grid[n - 1] - tau, f64::INFINITY);
    if edge > 1e-3 {
        log::debug!("predictive_recursion: {edge:.2e} of the mass lies within tau of the grid boundary");
    }
    Ok(out)
}

/// Posterior mean of `η_j` given `x_j` under the prior `gstar` and the
/// truncated kernel.
pub fn npeb_estimate(xj: f64, gstar: &MixingDensity, tau: f64, y: f64) -> Result<f64> {
    if !xj.is_finite() || !(tau > 0.0) {
        return Err(domain("npeb_estimate", "need finite x and tau > 0"));
    }
    let grid = gstar.grid();
    let lw: Vec<f64> = grid
        .iter()
        .zip(gstar.density())
        .map(|(&e, &d)| {
            if d > 0.0 {
                log_kappa(xj, e, tau, y) + log(d)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Quadrature {
            what: "npeb_estimate",
            panels: grid.len(),
            reason: "posterior weights vanish on the grid",
        });
    }
    let w: Vec<f64> = lw.iter().map(|v| exp(v - top)).collect();
    let num: Vec<f64> = w.iter().zip(grid).map(|(a, g)| a * g).collect();
    let den = trapezoid(grid, &w);
    if !(den > 0.0) {
        return Err(Error::Quadrature {
            what: "npeb_estimate",
            panels: grid.len(),
            reason: "posterior normaliser underflowed",
        });
    }
    Ok(trapezoid(grid, &num) / den)
}

/// How `η` is estimated for the plug-in intervals.
#[derive(Debug, Clone, PartialEq)]
pub enum EtaEstimator {
    /// Profile MLE at each hypothesised `θ₀`.
    Profile,
    Conditional,
    Bayes(HyperParams),
    GaussianEb,
    /// Predictive recursion with the given grid size and number of
    /// permutations.
    NpEb {
        grid_size: usize,
        n_perm: usize,
    },
    /// A known `η`.
    Fixed(Vec<f64>),
}

impl EtaEstimator {
    pub fn np_eb_default() -> Self {
        Self::NpEb {
            grid_size: 512,
            n_perm: 50,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Profile => "profile",
            Self::Conditional => "conditional",
            Self::Bayes(_) => "bayes",
            Self::GaussianEb => "gaussian-eb",
            Self::NpEb { .. } => "np-eb",
            Self::Fixed(_) => "fixed",
        }
    }

    /// Whether the estimate depends on the hypothesised `θ₀`.
    pub fn depends_on_theta(&self) -> bool {
        matches!(self, Self::Profile)
    }

    /// `η̂` for `datum`; `theta0` is used only by [`EtaEstimator::Profile`].
    pub fn estimate<R: Rng + ?Sized>(
        &self,
        datum: &SelectedDatum,
        tau: &[f64],
        sigma: f64,
        theta0: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let x = &datum.x;
        match self {
            Self::Profile => profile_mle(x, theta0, tau, sigma),
            Self::Conditional => conditional_mle(x, datum.y, tau),
            Self::Bayes(h) => bayes_mode(x, datum.y, tau, *h),
            Self::GaussianEb => {
                let h = gaussian_eb_fit(x, datum.y, tau)?;
                gaussian_eb_estimate(x, h, tau)
            }
            Self::NpEb { grid_size, n_perm } => {
                check_scales("np-eb", x, tau)?;
                let t = tau[0];
                if tau.iter().any(|v| *v != t) {
                    return Err(domain("np-eb", "predictive recursion needs a common tau"));
                }
                let grid = default_pr_grid(x, datum.y, t, *grid_size)?;
                let weights = default_pr_weights(x.len());
                let g = predictive_recursion(x, datum.y, t, &grid, &weights, *n_perm, rng)?;
                x.iter().map(|&xj| npeb_estimate(xj, &g, t, datum.y)).collect()
            }
            Self::Fixed(eta) => {
                if eta.len() != x.len() {
                    return Err(domain("fixed estimator", "eta has the wrong length"));
                }
                Ok(eta.clone())
            }
        }
    }
}

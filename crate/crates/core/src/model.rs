//! The selective model `P_{η,θ}`: the law of `(X, Y)` given that `Y`
//! exceeds every `X_j`, with `Y ~ N(θ, σ²)` and `X_j ~ N(η_j, τ_j²)`.
//!
//! The `Y` margin has density proportional to `φ_σ(y − θ)·exp(H(y))` with
//! `H(y) = Σ_j ln Φ((y − η_j)/τ_j)`. Integrals of it are computed with
//! composite 10-point Gauss–Legendre panels on a fixed grid `k·step`, walked
//! outward from the mode until the log-integrand falls [`DROP`] below its
//! maximum. Because `H` does not depend on `θ`, its values at the grid nodes
//! are cached and reused across `θ`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cell::RefCell;

use libm::{exp, floor, log, sqrt};
use rand::distributions::Open01;
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::gauss::{self, LogProb, TruncatedNormal};
use crate::quad::{gl10_nodes, GL10};
use crate::roots::{bracket_decreasing, brent, newton_decreasing};

/// Panels whose largest log-integrand value is this far below the maximum
/// are dropped (relative mass below `e^-40`).
pub const DROP: f64 = 40.0;
/// Panel width in units of the smallest possible local standard deviation
/// of the integrand.
pub const PANEL_SDS: f64 = 2.0;
/// Default cap on the number of panels in one integral.
pub const DEFAULT_MAX_PANELS: usize = 2000;

/// Nuisance means `η`, their scales `τ`, and the scale `σ` of the selected
/// group.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectiveModel {
    eta: Vec<f64>,
    tau: Vec<f64>,
    sigma: f64,
}

/// One observation: the unselected outcomes `x` and the selected `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedDatum {
    pub x: Vec<f64>,
    pub y: f64,
}

impl SelectedDatum {
    /// Checks the selection event `max x < y`.
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) || y.is_nan() {
            return Err(domain("SelectedDatum", "non-finite observation"));
        }
        let d = Self { x, y };
        if !(d.x_max() < y) {
            return Err(Error::SelectionNotSatisfied { x_max: d.x_max(), y });
        }
        Ok(d)
    }

    pub fn x_max(&self) -> f64 {
        self.x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn p(&self) -> usize {
        self.x.len()
    }

    pub fn shifted(&self, d: f64) -> Self {
        Self {
            x: self.x.iter().map(|v| v + d).collect(),
            y: self.y + d,
        }
    }
}

impl SelectiveModel {
    pub fn new(eta: Vec<f64>, tau: Vec<f64>, sigma: f64) -> Result<Self> {
        if eta.is_empty() {
            return Err(domain("SelectiveModel", "need at least one unselected group"));
        }
        if eta.len() != tau.len() {
            return Err(domain(
                "SelectiveModel",
                alloc::format!("eta has length {} but tau has length {}", eta.len(), tau.len()),
            ));
        }
        if eta.iter().any(|v| !v.is_finite()) {
            return Err(domain("SelectiveModel", "eta must be finite"));
        }
        if tau.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(domain("SelectiveModel", "tau must be positive and finite"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain("SelectiveModel", "sigma must be positive and finite"));
        }
        Ok(Self { eta, tau, sigma })
    }

    /// All `τ_j` equal.
    pub fn homogeneous(eta: Vec<f64>, tau: f64, sigma: f64) -> Result<Self> {
        let p = eta.len();
        Self::new(eta, alloc::vec![tau; p], sigma)
    }

    pub fn p(&self) -> usize {
        self.eta.len()
    }
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }
    pub fn tau(&self) -> &[f64] {
        &self.tau
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn shifted(&self, d: f64) -> Self {
        Self {
            eta: self.eta.iter().map(|e| e + d).collect(),
            tau: self.tau.clone(),
            sigma: self.sigma,
        }
    }

    /// `H(y) = Σ_j ln Φ((y − η_j)/τ_j)`.
    pub fn log_h(&self, y: f64) -> f64 {
        self.eta
            .iter()
            .zip(&self.tau)
            .map(|(e, t)| gauss::log_cdf((y - e) / t))
            .sum()
    }

    /// `(H'(y), H''(y))`.
    fn log_h_derivs(&self, y: f64) -> (f64, f64) {
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (e, t) in self.eta.iter().zip(&self.tau) {
            let z = (y - e) / t;
            let l = gauss::inv_mills_lower(z);
            d1 += l / t;
            d2 -= l * (z + l) / (t * t);
        }
        (d1, d2)
    }

    /// Lower bound on the local standard deviation of the `Y`-margin
    /// integrand, whatever `θ` is.
    pub fn min_local_sd(&self) -> f64 {
        let prec = 1.0 / (self.sigma * self.sigma) + self.tau.iter().map(|t| 1.0 / (t * t)).sum::<f64>();
        1.0 / sqrt(prec)
    }

    /// Mode of the `Y` margin under `θ`.
    pub fn mode(&self, theta: f64) -> Result<f64> {
        let s2 = self.sigma * self.sigma;
        let (d1, _) = self.log_h_derivs(theta);
        let hi = theta + s2 * d1;
        if !(hi >= theta) || !hi.is_finite() {
            return Err(domain("mode", "non-finite derivative of the selection factor"));
        }
        if hi == theta {
            return Ok(theta);
        }
        newton_decreasing(
            |t| {
                let (d1, d2) = self.log_h_derivs(t);
                (-(t - theta) / s2 + d1, -1.0 / s2 + d2)
            },
            theta,
            hi,
            0.5 * (theta + hi),
            1e-13,
            200,
        )
    }

    /// A margin with a fresh node cache and the default panel layout.
    pub fn margin(&self) -> SelectiveMargin {
        SelectiveMargin::new(self.clone())
    }

    /// `ln c(η, θ)`, the log probability of the selection event.
    pub fn selection_log_prob(&self, theta: f64) -> Result<LogProb> {
        check_theta(theta)?;
        self.margin().selection_log_prob(theta)
    }

    /// Log density of `Y` under `P_{η,θ}`.
    pub fn marginal_logpdf(&self, theta: f64, y: f64) -> Result<f64> {
        let lc = self.selection_log_prob(theta)?.value();
        Ok(self.log_joint_y(theta, y) - lc)
    }

    /// `ln φ_σ(y − θ) + H(y)`.
    fn log_joint_y(&self, theta: f64, y: f64) -> f64 {
        gauss::log_pdf((y - theta) / self.sigma) - log(self.sigma) + self.log_h(y)
    }

    pub fn marginal_cdf(&self, theta: f64, y: f64) -> Result<f64> {
        check_theta(theta)?;
        self.margin().cdf(theta, y)
    }

    /// The `α/2` and `1 − α/2` quantiles `(l(θ, η), u(θ, η))` of `Y`.
    pub fn marginal_quantiles(&self, theta: f64, alpha: f64) -> Result<(f64, f64)> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(domain("marginal_quantiles", "alpha must lie in (0, 1)"));
        }
        check_theta(theta)?;
        let s = self.margin().sampler(theta)?;
        Ok((s.quantile(0.5 * alpha)?, s.quantile(1.0 - 0.5 * alpha)?))
    }

    /// `ln p(x | y)`: the unselected outcomes given `Y = y`, each an
    /// upper-truncated normal. `y` may be `+∞`.
    pub fn conditional_x_logpdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        if x.len() != self.p() {
            return Err(domain("conditional_x_logpdf", "x has the wrong length"));
        }
        let x_max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(x_max < y) {
            return Err(domain(
                "conditional_x_logpdf",
                alloc::format!("selection event fails: max x = {x_max}, y = {y}"),
            ));
        }
        Ok(x.iter()
            .zip(&self.eta)
            .zip(&self.tau)
            .map(|((xj, e), t)| gauss::log_pdf((xj - e) / t) - log(*t) - gauss::log_cdf((y - e) / t))
            .sum())
    }

    /// `n` independent draws from `P_{η,θ}`.
    pub fn sample_selective<R: Rng + ?Sized>(&self, theta: f64, n: usize, rng: &mut R) -> Result<Vec<SelectedDatum>> {
        check_theta(theta)?;
        let s = self.margin().sampler(theta)?;
        (0..n).map(|_| s.sample(rng)).collect()
    }

    /// Quadrature nodes of the `Y` margin under `θ`, as `(y, probability)`
    /// pairs summing to one, together with `ln c(η, θ)`. Nothing is cached.
    pub fn margin_nodes(&self, theta: f64) -> Result<(f64, Vec<(f64, f64)>)> {
        check_theta(theta)?;
        let step = PANEL_SDS * self.min_local_sd();
        let mode = self.mode(theta)?;
        let gmax = self.log_joint_y(theta, mode);
        let k_mode = floor(mode / step) as i64;
        let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(400);
        let push_panel = |k: i64, nodes: &mut Vec<(f64, f64)>| -> bool {
            let a = k as f64 * step;
            let ts = gl10_nodes(a, a + step);
            let mut top = f64::NEG_INFINITY;
            for (t, (_, w)) in ts.iter().zip(GL10.iter()) {
                let g = self.log_joint_y(theta, *t) - gmax;
                top = top.max(g);
                nodes.push((*t, w * 0.5 * step * exp(g)));
            }
            top > -DROP
        };
        let mut k = k_mode;
        let mut n = 0;
        while push_panel(k, &mut nodes) {
            k -= 1;
            n += 1;
            if n > DEFAULT_MAX_PANELS {
                return Err(Error::Quadrature {
                    what: "margin_nodes",
                    panels: n,
                    reason: "panel budget exhausted",
                });
            }
        }
        k = k_mode + 1;
        while push_panel(k, &mut nodes) {
            k += 1;
            n += 1;
            if n > DEFAULT_MAX_PANELS {
                return Err(Error::Quadrature {
                    what: "margin_nodes",
                    panels: n,
                    reason: "panel budget exhausted",
                });
            }
        }
        let total: f64 = nodes.iter().map(|v| v.1).sum();
        for v in nodes.iter_mut() {
            v.1 /= total;
        }
        Ok((gmax + log(total), nodes))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(domain("theta", "must be finite"))
    }
}

/// Panel sums of the `Y`-margin integrand for one `θ`, scaled by
/// `exp(−gmax)`.
struct Scan {
    gmax: f64,
    k0: i64,
    sums: Vec<f64>,
}

impl Scan {
    fn total(&self) -> f64 {
        self.sums.iter().sum()
    }
}

#[derive(Debug, Clone)]
struct Partial {
    y: f64,
    left: [f64; 10],
    right: [f64; 10],
}

/// Quadrature over the `Y` margin with `H` cached at the grid nodes.
///
/// Not `Sync`; clone one per thread.
#[derive(Debug, Clone)]
pub struct SelectiveMargin {
    model: SelectiveModel,
    step: f64,
    max_panels: usize,
    cache: RefCell<BTreeMap<i64, [f64; 10]>>,
    partial: RefCell<Option<Partial>>,
}

impl SelectiveMargin {
    pub fn new(model: SelectiveModel) -> Self {
        let step = PANEL_SDS * model.min_local_sd();
        Self {
            model,
            step,
            max_panels: DEFAULT_MAX_PANELS,
            cache: RefCell::new(BTreeMap::new()),
            partial: RefCell::new(None),
        }
    }

    pub fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels.max(1);
        self
    }

    pub fn model(&self) -> &SelectiveModel {
        &self.model
    }

    pub fn cached_panels(&self) -> usize {
        self.cache.borrow().len()
    }

    fn panel_h(&self, k: i64) -> [f64; 10] {
        if let Some(h) = self.cache.borrow().get(&k) {
            return *h;
        }
        let a = k as f64 * self.step;
        let ts = gl10_nodes(a, a + self.step);
        let mut h = [0.0; 10];
        for (hv, t) in h.iter_mut().zip(ts.iter()) {
            *hv = self.model.log_h(*t);
        }
        self.cache.borrow_mut().insert(k, h);
        h
    }

    #[inline]
    fn log_phi(&self, theta: f64, t: f64) -> f64 {
        let s = self.model.sigma;
        gauss::log_pdf((t - theta) / s) - log(s)
    }

    /// Scaled panel integral and the largest scaled log-integrand value.
    fn panel_sum(&self, k: i64, theta: f64, gmax: f64) -> (f64, f64) {
        let h = self.panel_h(k);
        let a = k as f64 * self.step;
        let ts = gl10_nodes(a, a + self.step);
        let mut sum = 0.0;
        let mut top = f64::NEG_INFINITY;
        for i in 0..10 {
            let g = h[i] + self.log_phi(theta, ts[i]) - gmax;
            top = top.max(g);
            sum += GL10[i].1 * exp(g);
        }
        (sum * 0.5 * self.step, top)
    }

    fn scan(&self, theta: f64) -> Result<Scan> {
        check_theta(theta)?;
        let mode = self.model.mode(theta)?;
        let gmax = self.model.log_joint_y(theta, mode);
        if !gmax.is_finite() {
            return Err(Error::Quadrature {
                what: "selective margin",
                panels: 0,
                reason: "non-finite integrand at the mode",
            });
        }
        let k_mode = floor(mode / self.step) as i64;
        let mut left: Vec<f64> = Vec::new();
        let mut k = k_mode - 1;
        loop {
            let (s, top) = self.panel_sum(k, theta, gmax);
            if top <= -DROP {
                break;
            }
            left.push(s);
            k -= 1;
            if left.len() > self.max_panels {
                return Err(self.budget_error(left.len()));
            }
        }
        let k0 = k + 1;
        let mut sums: Vec<f64> = left.into_iter().rev().collect();
        let mut k = k_mode;
        loop {
            let (s, top) = self.panel_sum(k, theta, gmax);
            if top <= -DROP && k > k_mode {
                break;
            }
            sums.push(s);
            k += 1;
            if sums.len() > self.max_panels {
                return Err(self.budget_error(sums.len()));
            }
        }
        let scan = Scan { gmax, k0, sums };
        let total = scan.total();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Quadrature {
                what: "selective margin",
                panels: scan.sums.len(),
                reason: "non-positive or non-finite total",
            });
        }
        Ok(scan)
    }

    fn budget_error(&self, panels: usize) -> Error {
        Error::Quadrature {
            what: "selective margin",
            panels,
            reason: "panel budget exhausted",
        }
    }

    pub fn selection_log_prob(&self, theta: f64) -> Result<LogProb> {
        let s = self.scan(theta)?;
        Ok(LogProb::from_raw((s.gmax + log(s.total())).min(0.0)))
    }

    /// Scaled integrals of the panel containing `y`, split at `y`.
    fn split_panel(&self, k: i64, y: f64, theta: f64, gmax: f64) -> (f64, f64) {
        let a = k as f64 * self.step;
        let b = a + self.step;
        let tl = gl10_nodes(a, y);
        let tr = gl10_nodes(y, b);
        let cached = match &*self.partial.borrow() {
            Some(p) if p.y == y => Some((p.left, p.right)),
            _ => None,
        };
        let (hl, hr) = cached.unwrap_or_else(|| {
            let mut hl = [0.0; 10];
            let mut hr = [0.0; 10];
            for i in 0..10 {
                hl[i] = self.model.log_h(tl[i]);
                hr[i] = self.model.log_h(tr[i]);
            }
            *self.partial.borrow_mut() = Some(Partial { y, left: hl, right: hr });
            (hl, hr)
        });
        let mut sl = 0.0;
        let mut sr = 0.0;
        for i in 0..10 {
            let w = GL10[i].1;
            sl += w * exp(hl[i] + self.log_phi(theta, tl[i]) - gmax);
            sr += w * exp(hr[i] + self.log_phi(theta, tr[i]) - gmax);
        }
        (sl * 0.5 * (y - a), sr * 0.5 * (b - y))
    }

    /// Scaled mass below and above `y`.
    fn split(&self, theta: f64, y: f64) -> Result<(f64, f64)> {
        if y.is_nan() {
            return Err(domain("cdf", "y is NaN"));
        }
        let s = self.scan(theta)?;
        let total = s.total();
        if y == f64::INFINITY {
            return Ok((total, 0.0));
        }
        if y == f64::NEG_INFINITY {
            return Ok((0.0, total));
        }
        let ky = floor(y / self.step) as i64;
        let k_end = s.k0 + s.sums.len() as i64;
        if ky < s.k0 {
            return Ok((0.0, total));
        }
        if ky >= k_end {
            return Ok((total, 0.0));
        }
        let idx = (ky - s.k0) as usize;
        let below: f64 = s.sums[..idx].iter().sum();
        let above: f64 = s.sums[idx + 1..].iter().sum();
        let (pl, pr) = self.split_panel(ky, y, theta, s.gmax);
        Ok((below + pl, above + pr))
    }

    /// `P_{η,θ}(Y ≤ y)`.
    pub fn cdf(&self, theta: f64, y: f64) -> Result<f64> {
        let (lo, hi) = self.split(theta, y)?;
        Ok(lo / (lo + hi))
    }

    /// `P_{η,θ}(Y > y)`, accurate when small.
    pub fn sf(&self, theta: f64, y: f64) -> Result<f64> {
        let (lo, hi) = self.split(theta, y)?;
        Ok(hi / (lo + hi))
    }

    /// Eager inverse-CDF sampler for one `θ`.
    pub fn sampler(&self, theta: f64) -> Result<SelectiveSampler> {
        let s = self.scan(theta)?;
        let mut cum = Vec::with_capacity(s.sums.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for v in &s.sums {
            acc += v;
            cum.push(acc);
        }
        Ok(SelectiveSampler {
            model: self.model.clone(),
            theta,
            step: self.step,
            gmax: s.gmax,
            k0: s.k0,
            cum,
        })
    }

    /// Solve `F(y | θ) = target` for `θ`. `F` is decreasing in `θ`.
    pub fn solve_theta(&self, y: f64, target: f64) -> Result<f64> {
        let sigma = self.model.sigma;
        let f = |theta: f64| -> Result<f64> {
            let (lo, hi) = self.split(theta, y)?;
            // lo/(lo+hi) − target, computed as a difference of masses so that
            // targets near one keep their precision
            Ok(((1.0 - target) * lo - target * hi) / (lo + hi))
        };
        let (a, b) = bracket_decreasing(f, y - 6.0 * sigma, y + 6.0 * sigma, 80, "oracle interval")?;
        brent(f, a, b, 1e-11 * sigma, 200)
    }
}

/// Inverse-CDF sampler for `P_{η,θ}` at a fixed `θ`. `Sync`.
#[derive(Debug, Clone)]
pub struct SelectiveSampler {
    model: SelectiveModel,
    theta: f64,
    step: f64,
    gmax: f64,
    k0: i64,
    cum: Vec<f64>,
}

impl SelectiveSampler {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Scaled integral of the margin over `[a, y]`, fresh nodes.
    fn partial_mass(&self, a: f64, y: f64) -> f64 {
        let ts = gl10_nodes(a, y);
        let mut s = 0.0;
        for i in 0..10 {
            s += GL10[i].1 * exp(self.model.log_joint_y(self.theta, ts[i]) - self.gmax);
        }
        s * 0.5 * (y - a)
    }

    /// The `u`-quantile of `Y`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(domain("selective quantile", "u must lie in (0, 1)"));
        }
        let total = *self.cum.last().unwrap_or(&0.0);
        let target = u * total;
        // first i with cum[i+1] >= target
        let i = self.cum[1..].partition_point(|c| *c < target).min(self.cum.len() - 2);
        let a = (self.k0 + i as i64) as f64 * self.step;
        let b = a + self.step;
        let base = self.cum[i];
        let need = target - base;
        let width = self.cum[i + 1] - base;
        let x0 = a + self.step * (need / width).clamp(0.0, 1.0);
        newton_decreasing(
            |y| {
                let m = self.partial_mass(a, y);
                let d = exp(self.model.log_joint_y(self.theta, y) - self.gmax);
                (need - m, -d)
            },
            a,
            b,
            x0,
            1e-14,
            200,
        )
    }

    /// One draw of `(X, Y)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SelectedDatum> {
        let u: f64 = rng.sample(Open01);
        let y = self.quantile(u)?;
        let mut x = Vec::with_capacity(self.model.p());
        for (e, t) in self.model.eta.iter().zip(&self.model.tau) {
            x.push(TruncatedNormal::new(*e, *t, f64::NEG_INFINITY, y)?.sample(rng)?);
        }
        // rounding can put a draw exactly at y
        if x.iter().any(|v| !(*v < y)) {
            for v in x.iter_mut() {
                if !(*v < y) {
                    *v = libm::nextafter(y, f64::NEG_INFINITY);
                }
            }
        }
        Ok(SelectedDatum { x, y })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_eta(s0: f64, p: usize) -> Vec<f64> {
        (1..=p)
            .map(|j| s0 * gauss::quantile((j as f64 - 0.5) / p as f64))
            .collect()
    }

    #[test]
    fn selection_prob_references() {
        let cases = [
            (0.5, -2.0, -10.909675135356186923),
            (0.5, -1.0, -7.2727113765031778267),
            (0.5, 0.0, -4.4630014927657026171),
            (1.4, -4.0, -27.091011355449655496),
            (1.4, -2.0, -15.732225026908512825),
        ];
        for (s0, theta, want) in cases {
            let m = SelectiveModel::homogeneous(fig_eta(s0, 50), 1.0, 1.0).unwrap();
            let got = m.selection_log_prob(theta).unwrap().value();
            assert!((got - want).abs() < 1e-9, "s0={s0} theta={theta}: {got} vs {want}");
        }
    }

    #[test]
    fn p1_closed_form() {
        for d in [-3.0, -1.5, 0.0, 1.0, 3.0] {
            let m = SelectiveModel::new(alloc::vec![d], alloc::vec![1.0], 1.0).unwrap();
            let got = m.selection_log_prob(0.0).unwrap().value();
            let want = gauss::log_cdf(-d / core::f64::consts::SQRT_2);
            assert!((got - want).abs() < 1e-10, "{d}: {got} vs {want}");
        }
    }

    #[test]
    fn quantiles_invert_cdf() {
        let m = SelectiveModel::homogeneous(fig_eta(1.4, 50), 1.0, 1.0).unwrap();
        for theta in [-4.0, 0.0, 3.0] {
            let (l, u) = m.marginal_quantiles(theta, 0.05).unwrap();
            assert!((m.marginal_cdf(theta, l).unwrap() - 0.025).abs() < 1e-10);
            assert!((m.marginal_cdf(theta, u).unwrap() - 0.975).abs() < 1e-10);
        }
    }
}

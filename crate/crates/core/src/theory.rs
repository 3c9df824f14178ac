//! Numerical checks of the auxiliary lemmas for the two-group model
//! `p = 1`, `τ = σ = 1`.

use alloc::vec;

use libm::{cos, exp, expm1, log, sin, sqrt};
use rand::Rng;

use crate::error::{domain, Result};
use crate::gauss;
use crate::model::SelectiveModel;
use crate::quad::integrate;
use crate::roots::{bracket_decreasing, brent};

/// A Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub se: f64,
    pub n: usize,
}

impl McEstimate {
    fn from_hits(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            estimate: p,
            se: sqrt(p * (1.0 - p) / n as f64),
            n,
        }
    }
}

/// `P_{η,0}(B_{η,Δ})` for the circle section
/// `{x ≤ y : (x − η)² + y² ≤ η²/2 + Δ²}`, by quadrature of its
/// one-dimensional representation.
pub fn prob_b(eta: f64, delta: f64) -> Result<f64> {
    if !(eta >= 0.0 && eta.is_finite()) || !(delta > 0.0 && delta.is_finite()) {
        return Err(domain("prob_b", "need eta ≥ 0 and delta > 0"));
    }
    let x = eta / core::f64::consts::SQRT_2;
    // v = Δ sin t removes the square-root singularity at v = Δ
    let f = |t: f64| {
        let v = delta * sin(t);
        let a = delta * cos(t);
        let r = sqrt(x * x + a * a);
        let g = -expm1(gauss::log_sf_ratio(r, x));
        2.0 * gauss::pdf(v) * g * delta * cos(t)
    };
    integrate(f, 0.0, core::f64::consts::FRAC_PI_2, 1e-14, 1e-12, 2000)
}

/// Monte Carlo estimate of [`prob_b`] from exact draws of `P_{η,0}`.
pub fn prob_b_monte_carlo<R: Rng + ?Sized>(eta: f64, delta: f64, n: usize, rng: &mut R) -> Result<McEstimate> {
    if !(eta >= 0.0) || !(delta > 0.0) || n == 0 {
        return Err(domain("prob_b_monte_carlo", "need eta ≥ 0, delta > 0, n ≥ 1"));
    }
    let model = SelectiveModel::new(vec![eta], vec![1.0], 1.0)?;
    let sampler = model.margin().sampler(0.0)?;
    let r2 = 0.5 * eta * eta + delta * delta;
    let mut hits = 0;
    for _ in 0..n {
        let d = sampler.sample(rng)?;
        let dx = d.x[0] - eta;
        if dx * dx + d.y * d.y <= r2 {
            hits += 1;
        }
    }
    Ok(McEstimate::from_hits(hits, n))
}

/// Monte Carlo estimate of `P_{0,θ}(B*_{θ,r})` for
/// `B*_{θ,r} = {x ≤ y : x² + (y − θ)² ≤ min(θ, 0)²/2 + r²}`.
pub fn prob_bstar<R: Rng + ?Sized>(theta: f64, r: f64, n: usize, rng: &mut R) -> Result<McEstimate> {
    if !theta.is_finite() || !(r > 0.0) || n == 0 {
        return Err(domain("prob_bstar", "need finite theta, r > 0, n ≥ 1"));
    }
    let model = SelectiveModel::new(vec![0.0], vec![1.0], 1.0)?;
    let sampler = model.margin().sampler(theta)?;
    let m = theta.min(0.0);
    let r2 = 0.5 * m * m + r * r;
    let mut hits = 0;
    for _ in 0..n {
        let d = sampler.sample(rng)?;
        let dy = d.y - theta;
        if d.x[0] * d.x[0] + dy * dy <= r2 {
            hits += 1;
        }
    }
    Ok(McEstimate::from_hits(hits, n))
}

/// Exact `P_{0,θ}(B*_{θ,r})` when `θ ≥ √2 r`, where the section is a full
/// disc: `(1 − e^{−r²/2}) / Φ(θ/√2)`.
pub fn prob_bstar_disc(theta: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !(theta >= core::f64::consts::SQRT_2 * r) {
        return Err(domain("prob_bstar_disc", "need theta ≥ √2 r > 0"));
    }
    Ok(-expm1(-0.5 * r * r) / gauss::cdf(theta / core::f64::consts::SQRT_2))
}

/// `z(x)` solving `Φ(−x − z) = α Φ(−x)`.
pub fn z_offset(x: f64, alpha: f64) -> Result<f64> {
    if !x.is_finite() || !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain("z_offset", "need finite x and alpha in (0, 1)"));
    }
    let la = log(alpha);
    let base = gauss::log_sf(x);
    let f = |z: f64| Ok(gauss::log_sf(x + z) - base - la);
    let (a, b) = bracket_decreasing(f, 0.0, 1.0, 200, "z_offset")?;
    brent(f, a.max(0.0), b, 1e-14, 300)
}

/// The two evaluations of `c(η) = P(X ≤ Y)` for `X ~ N(η, 1)`,
/// `Y ~ N(0, 1)`, and the scaled value `√π η e^{η²/4} c(η)` with its
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CEtaCheck {
    pub quadrature: f64,
    pub closed_form: f64,
    /// `√π η e^{η²/4} c(η)`, for `η > 0`.
    pub scaled: Option<f64>,
    /// `(η²/2)/(1 + η²/2)`
    pub sandwich_lower: f64,
    pub sandwich_upper: f64,
}

impl CEtaCheck {
    pub fn sandwich_holds(&self) -> bool {
        match self.scaled {
            Some(s) => self.sandwich_lower < s && s < self.sandwich_upper,
            None => true,
        }
    }
}

pub fn c_eta_check(eta: f64) -> Result<CEtaCheck> {
    if !eta.is_finite() {
        return Err(domain("c_eta_check", "eta must be finite"));
    }
    let model = SelectiveModel::new(vec![eta], vec![1.0], 1.0)?;
    let lq = model.selection_log_prob(0.0)?.value();
    let lc = gauss::log_cdf(-eta / core::f64::consts::SQRT_2);
    let scaled = (eta > 0.0).then(|| exp(0.5 * log(core::f64::consts::PI) + log(eta) + 0.25 * eta * eta + lq));
    let h = 0.5 * eta * eta;
    Ok(CEtaCheck {
        quadrature: exp(lq),
        closed_form: exp(lc),
        scaled,
        sandwich_lower: h / (1.0 + h),
        sandwich_upper: 1.0,
    })
}

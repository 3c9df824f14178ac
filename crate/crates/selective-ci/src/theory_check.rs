//! Numerical checks of the two-group lemmas, reported as a pass/fail table.

use std::fmt::Write;

use rayon::prelude::*;

use selective_ci_core::gauss::{self, chi2_3_cdf, mills_ratio_bounds_check};
use selective_ci_core::quad::integrate;
use selective_ci_core::theory::{c_eta_check, prob_b, prob_b_monte_carlo, prob_bstar, z_offset};
use selective_ci_core::Error;

use crate::simulation::rep_rng;

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Coarse grids and fewer Monte Carlo draws.
    pub fast: bool,
    /// `Δ` for the circle section, also used as `r` for `B*`.
    pub delta: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            fast: false,
            delta: 2.0,
            alpha: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    /// The worst value found, in the units of `limit`.
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Pass when `value ≤ limit`.
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }

    /// Pass when `value > limit`.
    fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value > limit,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub options: CheckOptions,
    pub rows: Vec<CheckRow>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn render(&self) -> String {
        let o = &self.options;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "theory check (delta = {}, alpha = {}, seed = {}{})",
            o.delta,
            o.alpha,
            o.seed,
            if o.fast { ", fast" } else { "" }
        );
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<w$}  {:>13.6e}  {:>13.6e}  {}",
                r.name,
                r.value,
                r.limit,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        s
    }
}

fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step).round() as usize;
    (0..=n).map(|i| a + step * i as f64).collect()
}

pub fn run(opts: &CheckOptions) -> Result<Report, Error> {
    let d = opts.delta;
    let coarse = if opts.fast { 4.0 } else { 1.0 };
    let draws = if opts.fast { 100_000 } else { 1_000_000 };
    let mut rows = Vec::new();

    let mut worst = 0.0f64;
    for eta in grid(-10.0, 20.0, 0.5 * coarse) {
        let c = c_eta_check(eta)?;
        worst = worst.max((c.quadrature - c.closed_form).abs());
    }
    rows.push(CheckRow::at_most(
        "c(eta) = Phi(-eta/sqrt 2), max abs error",
        worst,
        1e-8,
    ));

    let mut slack = f64::INFINITY;
    for eta in grid(10.0, 40.0, 0.5 * coarse) {
        let c = c_eta_check(eta)?;
        let s = c.scaled.unwrap_or(f64::NAN);
        slack = slack.min((s - c.sandwich_lower).min(c.sandwich_upper - s));
    }
    rows.push(CheckRow::above("c(eta) sandwich on [10, 40], min slack", slack, 0.0));

    let etas = grid(0.0, 10.0, 0.25 * coarse);
    let probs = etas.iter().map(|&e| prob_b(e, d)).collect::<Result<Vec<_>, _>>()?;
    let rise = probs.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    rows.push(CheckRow {
        name: "P(B) decreasing in eta on [0, 10], max increment".into(),
        value: rise,
        limit: 0.0,
        pass: rise < 0.0,
    });
    let upper = -(-0.5 * d * d).exp_m1();
    let lower = chi2_3_cdf(d * d)?;
    let over = probs.iter().map(|p| p - upper).fold(f64::NEG_INFINITY, f64::max);
    rows.push(CheckRow::at_most(
        "P(B) <= 1 - exp(-delta^2/2), max excess",
        over,
        1e-12,
    ));
    let under = probs.iter().map(|p| p - lower).fold(f64::INFINITY, f64::min);
    rows.push(CheckRow::above("P(B) > F_chi2_3(delta^2), min margin", under, 0.0));
    rows.push(CheckRow::at_most(
        "P(B) at eta = 0 vs 1 - exp(-delta^2/2)",
        (probs[0] - upper).abs(),
        1e-10,
    ));

    let mc = prob_b_monte_carlo(1.0, d, draws, &mut rep_rng(opts.seed, 0, 0, 1))?;
    let q = prob_b(1.0, d)?;
    rows.push(CheckRow::at_most(
        "P(B) at eta = 1 vs Monte Carlo, in SEs",
        (mc.estimate - q).abs() / mc.se,
        3.0,
    ));

    let thetas = [-3.0, -1.0, 0.0, 1.0, 3.0];
    let bstar = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &t)| prob_bstar(t, d, draws, &mut rep_rng(opts.seed, 1 + i as u64, 0, 2)))
        .collect::<Result<Vec<_>, _>>()?;
    let z = bstar
        .iter()
        .map(|m| (m.estimate - lower) / m.se)
        .fold(f64::INFINITY, f64::min);
    rows.push(CheckRow::above("P*(B*) >= F_chi2_3(r^2) - 3 SE, min z", z, -3.0));

    let density = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            x.sqrt() * (-0.5 * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
    };
    let mut worst = 0.0f64;
    for x in grid(0.5, 50.0, 0.5 * coarse) {
        let want = integrate(density, 0.0, x, 1e-14, 1e-13, 4000)?;
        worst = worst.max((chi2_3_cdf(x)? - want).abs());
    }
    rows.push(CheckRow::at_most("chi2_3 CDF identity, max abs error", worst, 1e-10));

    let mut slack = f64::INFINITY;
    for i in 1..=(4000.0 / coarse) as usize {
        let x = 0.01 * coarse * i as f64;
        let b = mills_ratio_bounds_check(x)?;
        slack = slack.min(if b.holds_strictly() {
            (b.ratio - b.lower).min(b.upper - b.ratio)
        } else {
            -1.0
        });
    }
    rows.push(CheckRow::above(
        "Mills ratio sandwich on [0.01, 40], min slack",
        slack,
        0.0,
    ));

    let mut worst = f64::INFINITY;
    let mut prev = f64::INFINITY;
    let mut increasing = false;
    for i in 1..=(3900.0 / coarse) as usize {
        let x = 1.0 + 0.01 * coarse * i as f64;
        let z = z_offset(x, opts.alpha)?;
        worst = worst.min(x * z - 0.25 * (1.0 - opts.alpha));
        increasing |= z >= prev;
        prev = z;
    }
    rows.push(CheckRow {
        name: "x z(x) >= (1 - alpha)/4 on (1, 40], min margin".into(),
        value: worst,
        limit: 0.0,
        pass: worst >= 0.0 && !increasing,
    });
    let far = z_offset(-10.0, opts.alpha)? - (gauss::quantile(1.0 - opts.alpha) + 10.0);
    rows.push(CheckRow::at_most("z(-10) vs untruncated quantile", far.abs(), 1e-8));

    Ok(Report {
        options: opts.clone(),
        rows,
    })
}

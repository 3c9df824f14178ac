use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selective_ci_core::gauss;
use selective_ci_core::quad::integrate;
use selective_ci_core::SelectiveModel;

fn fig_eta(s0: f64, p: usize) -> Vec<f64> {
    (1..=p)
        .map(|j| s0 * gauss::quantile((j as f64 - 0.5) / p as f64))
        .collect()
}

fn random_model(rng: &mut ChaCha8Rng, p: usize) -> SelectiveModel {
    let eta: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let tau: Vec<f64> = (0..p).map(|_| rng.gen_range(0.3..2.0)).collect();
    SelectiveModel::new(eta, tau, rng.gen_range(0.3..2.0)).unwrap()
}

/// Adaptive integration of `exp(logpdf)` over a window wide enough for the
/// margin, split at the mode so each piece is monotone.
fn integrate_density(m: &SelectiveModel, theta: f64) -> f64 {
    let lc = m.selection_log_prob(theta).unwrap().value();
    let f = |y: f64| {
        let v = gauss::log_pdf((y - theta) / m.sigma()) - m.sigma().ln() + m.log_h(y) - lc;
        v.exp()
    };
    let mode = m.mode(theta).unwrap();
    let w = 20.0 * m.sigma();
    integrate(f, mode - w, mode, 1e-14, 1e-11, 4000).unwrap()
        + integrate(f, mode, mode + w, 1e-14, 1e-11, 4000).unwrap()
}

#[test]
fn reported_selection_probability() {
    let m = SelectiveModel::homogeneous(fig_eta(0.5, 50), 1.0, 1.0).unwrap();
    let c = m.selection_log_prob(-2.0).unwrap().prob();
    assert!((c - 1.8e-5).abs() < 0.05e-5, "{c}");
    // 40-digit reference
    assert!((c / 1.828_050_922_541_31e-5 - 1.0).abs() < 1e-8);
}

#[test]
fn wide_scenario_reference() {
    let m = SelectiveModel::homogeneous(fig_eta(1.4, 50), 1.0, 1.0).unwrap();
    let c = m.selection_log_prob(-4.0).unwrap().prob();
    assert!((c / 1.716_023_611_315_36e-12 - 1.0).abs() < 1e-8, "{c}");
    assert!(c < 2e-12);
}

#[test]
fn two_group_closed_form() {
    for i in -6..=6 {
        let d = 0.5 * i as f64;
        let m = SelectiveModel::new(vec![d], vec![1.0], 1.0).unwrap();
        let got = m.selection_log_prob(0.0).unwrap().prob();
        let want = gauss::cdf(-d / std::f64::consts::SQRT_2);
        assert!((got - want).abs() < 1e-8, "d={d}");
    }
    let m = SelectiveModel::new(vec![0.0], vec![1.0], 1.0).unwrap();
    assert!((m.selection_log_prob(0.0).unwrap().value() - 0.5f64.ln()).abs() < 1e-12);
}

#[test]
fn skew_normal_density() {
    let m = SelectiveModel::new(vec![0.0], vec![1.0], 1.0).unwrap();
    for i in -30..=30 {
        let y = 0.2 * i as f64;
        let want = (2.0 * gauss::pdf(y) * gauss::cdf(y)).ln();
        assert!((m.marginal_logpdf(0.0, y).unwrap() - want).abs() < 1e-10);
    }
}

#[test]
fn negligible_selection_gives_plain_normal() {
    let m = SelectiveModel::homogeneous(vec![-20.0, -21.0, -25.0], 1.0, 1.0).unwrap();
    for i in -30..=30 {
        let y = 0.1 * i as f64;
        let want = gauss::log_pdf(y);
        assert!((m.marginal_logpdf(0.0, y).unwrap() - want).abs() < 1e-6);
    }
}

#[test]
fn density_normalises_for_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..100 {
        let p = [1, 5, 50][i % 3];
        let m = random_model(&mut rng, p);
        let theta = rng.gen_range(-6.0..4.0);
        let total = integrate_density(&m, theta);
        assert!((total - 1.0).abs() < 1e-6, "model {i}: {total}");
    }
}

/// Quantiles of the two-group skew-normal `2φ(y)Φ(y)` by bisection on its
/// independently integrated CDF.
#[test]
fn two_group_quantiles_by_bisection() {
    let m = SelectiveModel::new(vec![0.0], vec![1.0], 1.0).unwrap();
    let cdf = |y: f64| integrate(|t| 2.0 * gauss::pdf(t) * gauss::cdf(t), -40.0, y, 1e-16, 1e-14, 4000).unwrap();
    let bisect = |target: f64| {
        let (mut a, mut b) = (-10.0, 10.0);
        for _ in 0..100 {
            let c = 0.5 * (a + b);
            if cdf(c) < target {
                a = c
            } else {
                b = c
            }
        }
        0.5 * (a + b)
    };
    let (l, u) = m.marginal_quantiles(0.0, 0.05).unwrap();
    assert!((l - bisect(0.025)).abs() < 1e-8, "{l}");
    assert!((u - bisect(0.975)).abs() < 1e-8, "{u}");
    assert!((m.marginal_cdf(0.0, l).unwrap() - 0.025).abs() < 1e-8);
}

#[test]
fn quantiles_approach_normal_when_selection_is_uninformative() {
    let m = SelectiveModel::homogeneous(fig_eta(0.5, 50), 1.0, 1.0).unwrap();
    let theta = 30.0;
    let (l, u) = m.marginal_quantiles(theta, 0.05).unwrap();
    let q = gauss::quantile(0.975);
    assert!((l - (theta - q)).abs() < 1e-8 && (u - (theta + q)).abs() < 1e-8);
}

#[test]
fn quantiles_and_selection_probability_are_monotone_in_theta() {
    for (s0, p) in [(0.5, 50), (1.4, 50), (0.0, 1)] {
        let eta = fig_eta(s0, p);
        let lo = eta.iter().copied().fold(f64::INFINITY, f64::min) - 6.0;
        let hi = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 6.0;
        let m = SelectiveModel::homogeneous(eta, 1.0, 1.0).unwrap();
        let n = ((hi - lo) / 0.1).round() as usize;
        let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for i in 0..=n {
            let theta = lo + 0.1 * i as f64;
            let (l, u) = m.marginal_quantiles(theta, 0.05).unwrap();
            let c = m.selection_log_prob(theta).unwrap().value();
            assert!(l < u);
            assert!(l > prev.0 && u > prev.1 && c > prev.2, "theta={theta}");
            prev = (l, u, c);
        }
    }
}

#[test]
fn location_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..30 {
        let m = random_model(&mut rng, 5);
        let d: f64 = rng.gen_range(-10.0..10.0);
        let md = m.shifted(d);
        let theta: f64 = rng.gen_range(-3.0..3.0);
        let y = theta + 0.7;
        let (l, u) = m.marginal_quantiles(theta, 0.05).unwrap();
        let (ld, ud) = md.marginal_quantiles(theta + d, 0.05).unwrap();
        assert!((ld - l - d).abs() < 1e-8 && (ud - u - d).abs() < 1e-8);
        let a = m.marginal_logpdf(theta, y).unwrap();
        let b = md.marginal_logpdf(theta + d, y + d).unwrap();
        assert!((a - b).abs() < 1e-8);
        let x: Vec<f64> = (0..5).map(|_| y - rng.gen_range(0.01..3.0)).collect();
        let xd: Vec<f64> = x.iter().map(|v| v + d).collect();
        let ca = m.conditional_x_logpdf(y, &x).unwrap();
        let cb = md.conditional_x_logpdf(y + d, &xd).unwrap();
        assert!((ca - cb).abs() < 1e-8);
    }
}

#[test]
fn conditional_density_is_joint_over_marginal() {
    let m = SelectiveModel::new(vec![0.3, -0.4, 1.1], vec![0.8, 1.3, 0.6], 1.2).unwrap();
    let theta = 0.5;
    let x = [0.2, -1.0, 0.9];
    let y = 1.4;
    // joint selective density of (x, y) from the unconditional product
    let mut joint = gauss::log_pdf((y - theta) / 1.2) - 1.2f64.ln();
    for ((xj, e), t) in x.iter().zip(m.eta()).zip(m.tau()) {
        joint += gauss::log_pdf((xj - e) / t) - t.ln();
    }
    joint -= m.selection_log_prob(theta).unwrap().value();
    let want = joint - m.marginal_logpdf(theta, y).unwrap();
    let got = m.conditional_x_logpdf(y, &x).unwrap();
    assert!((got - want).abs() < 1e-8, "{got} vs {want}");
}

#[test]
fn conditional_density_single_factor_and_limits() {
    let m = SelectiveModel::new(vec![0.5], vec![2.0], 1.0).unwrap();
    let t = selective_ci_core::TruncatedNormal::new(0.5, 2.0, f64::NEG_INFINITY, 1.0).unwrap();
    assert!((m.conditional_x_logpdf(1.0, &[-0.3]).unwrap() - t.log_pdf(-0.3)).abs() < 1e-12);
    let m3 = SelectiveModel::homogeneous(vec![0.0, 1.0, 2.0], 1.0, 1.0).unwrap();
    let x = [0.1, 0.2, 0.3];
    let want: f64 = x.iter().zip(m3.eta()).map(|(a, e)| gauss::log_pdf(a - e)).sum();
    assert!((m3.conditional_x_logpdf(f64::INFINITY, &x).unwrap() - want).abs() < 1e-10);
    assert!(m3.conditional_x_logpdf(0.25, &x).is_err());
}

fn ks_distance(mut draws: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let c = cdf(d);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn sampler_matches_two_group_cdf() {
    let m = SelectiveModel::new(vec![0.0], vec![1.0], 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let draws = m.sample_selective(0.0, 100_000, &mut rng).unwrap();
    assert!(draws.iter().all(|d| d.x_max() < d.y));
    let ys: Vec<f64> = draws.iter().map(|d| d.y).collect();
    // closed-form skew-normal CDF: Φ(y)²
    let ks = ks_distance(ys, |y| gauss::cdf(y).powi(2));
    assert!(ks < 0.006, "ks = {ks}");
}

#[test]
fn sampler_x_margin_matches_quadrature() {
    let m = SelectiveModel::new(vec![0.0, 1.0], vec![1.0, 1.0], 1.0).unwrap();
    let theta = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let draws = m.sample_selective(theta, n, &mut rng).unwrap();
    let hits = draws.iter().filter(|d| d.x[0] < 0.0).count();
    let p_hat = hits as f64 / n as f64;
    // P(X1 < 0, X1 < Y, X2 < Y) / P(X1 < Y, X2 < Y) by nested quadrature
    let num = integrate(
        |y| gauss::pdf(y - theta) * gauss::cdf(y.min(0.0)) * gauss::cdf(y - 1.0),
        theta - 15.0,
        theta + 15.0,
        1e-15,
        1e-12,
        4000,
    )
    .unwrap();
    let den = integrate(
        |y| gauss::pdf(y - theta) * gauss::cdf(y) * gauss::cdf(y - 1.0),
        theta - 15.0,
        theta + 15.0,
        1e-15,
        1e-12,
        4000,
    )
    .unwrap();
    let p = num / den;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((p_hat - p).abs() < 3.0 * se, "{p_hat} vs {p}");
}

#[test]
fn sampler_handles_rare_selection() {
    let m = SelectiveModel::homogeneous(fig_eta(1.4, 50), 1.0, 1.0).unwrap();
    assert!(m.selection_log_prob(-4.0).unwrap().prob() < 2e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = m.sample_selective(-4.0, 2000, &mut rng).unwrap();
    assert!(draws.iter().all(|d| d.x_max() < d.y && d.x.len() == 50));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_is_monotone_in_y(seed in 0u64..10_000, dy in 0.01f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 3);
        let theta = rng.gen_range(-3.0..3.0);
        let y = rng.gen_range(-4.0..4.0);
        let margin = m.margin();
        prop_assert!(margin.cdf(theta, y).unwrap() <= margin.cdf(theta, y + dy).unwrap() + 1e-15);
    }

    #[test]
    fn quantiles_invert_cdf(seed in 0u64..10_000, alpha in 0.01f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 4);
        let theta = rng.gen_range(-4.0..4.0);
        let (l, u) = m.marginal_quantiles(theta, alpha).unwrap();
        prop_assert!(l < u);
        prop_assert!((m.marginal_cdf(theta, l).unwrap() - 0.5 * alpha).abs() < 1e-8);
        prop_assert!((m.marginal_cdf(theta, u).unwrap() - (1.0 - 0.5 * alpha)).abs() < 1e-8);
    }
}

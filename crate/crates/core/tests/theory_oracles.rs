use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selective_ci_core::gauss::{self, chi2_3_cdf, std_normal_quantile};
use selective_ci_core::theory::{c_eta_check, prob_b, prob_b_monte_carlo, prob_bstar, prob_bstar_disc, z_offset};

/// The circle-section integral evaluated as written, by a fine midpoint
/// rule in `v` (the square-root endpoint behaviour costs accuracy but not
/// correctness at this resolution).
fn prob_b_direct(eta: f64, delta: f64) -> f64 {
    let n = 400_000;
    let h = delta / n as f64;
    let e = eta / std::f64::consts::SQRT_2;
    let denom = 1.0 - gauss::cdf(e);
    (0..n)
        .map(|i| {
            let v = (i as f64 + 0.5) * h;
            let top = (0.5 * eta * eta + delta * delta - v * v).sqrt();
            2.0 * gauss::pdf(v) * (gauss::cdf(top) - gauss::cdf(e)) / denom * h
        })
        .sum()
}

#[test]
fn prob_b_at_zero_is_rayleigh() {
    for delta in [0.5f64, 1.0, 2.0, 3.5] {
        let want = 1.0 - (-0.5 * delta * delta).exp();
        assert!((prob_b(0.0, delta).unwrap() - want).abs() < 1e-10);
    }
}

#[test]
fn prob_b_matches_direct_integral() {
    for (eta, delta) in [(0.5, 1.0), (1.0, 2.0), (3.0, 0.7), (6.0, 2.5)] {
        let got = prob_b(eta, delta).unwrap();
        let want = prob_b_direct(eta, delta);
        assert!((got - want).abs() < 1e-6, "({eta}, {delta}): {got} vs {want}");
    }
}

#[test]
fn prob_b_large_eta_approaches_chi2() {
    // 30-digit references; the gap to the limit shrinks like 1/η²
    let limit = chi2_3_cdf(4.0).unwrap();
    for (eta, want) in [
        (20.0, 0.739_944_871_752_420_9),
        (40.0, 0.738_893_844_897_020_7),
        (100.0, 0.738_593_409_796_502_9),
    ] {
        let got = prob_b(eta, 2.0).unwrap();
        assert!((got - want).abs() < 1e-10, "eta={eta}: {got} vs {want}");
    }
    assert!((prob_b(20.0, 2.0).unwrap() - limit).abs() < 1.5e-3);
    assert!((prob_b(40.0, 2.0).unwrap() - limit).abs() < 1e-3);
}

#[test]
fn prob_b_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mc = prob_b_monte_carlo(1.0, 2.0, 1_000_000, &mut rng).unwrap();
    let q = prob_b(1.0, 2.0).unwrap();
    assert!((mc.estimate - q).abs() < 3.0 * mc.se, "{mc:?} vs {q}");
}

#[test]
fn prob_b_monotone_and_bounded() {
    for delta in [0.5f64, 1.0, 2.0, 3.0] {
        let upper = 1.0 - (-0.5 * delta * delta).exp();
        let lower = chi2_3_cdf(delta * delta).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=40 {
            let eta = 0.25 * i as f64;
            let v = prob_b(eta, delta).unwrap();
            assert!(v < prev || i == 0, "delta={delta} eta={eta}");
            assert!(v <= upper + 1e-12 && v > lower, "delta={delta} eta={eta}: {v}");
            prev = v;
        }
    }
}

#[test]
fn bstar_at_zero_is_rayleigh() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mc = prob_bstar(0.0, 1.5, 1_000_000, &mut rng).unwrap();
    let want = 1.0 - (-0.5 * 1.5f64 * 1.5).exp();
    assert!((mc.estimate - want).abs() < 3.0 * mc.se, "{mc:?} vs {want}");
}

#[test]
fn bstar_disc_closed_form() {
    let r = 1.0;
    let theta = 2.0 * r;
    let exact = prob_bstar_disc(theta, r).unwrap();
    let base = 1.0 - (-0.5 * r * r).exp();
    assert!(exact >= base);
    assert!((exact - base / gauss::cdf(theta / std::f64::consts::SQRT_2)).abs() < 1e-15);
    let mc = prob_bstar(theta, r, 1_000_000, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    assert!((mc.estimate - exact).abs() < 3.0 * mc.se, "{mc:?} vs {exact}");
    assert!(prob_bstar_disc(1.0, 1.0).is_err());
}

#[test]
fn bstar_above_chi2_bound() {
    let bound = chi2_3_cdf(4.0).unwrap();
    for theta in [-3.0, -1.0, 1.0, 4.0] {
        let mc = prob_bstar(theta, 2.0, 200_000, &mut ChaCha8Rng::seed_from_u64(theta.to_bits())).unwrap();
        assert!(mc.estimate >= bound - 3.0 * mc.se, "theta={theta}: {mc:?}");
    }
    let mc = prob_bstar(-3.0, 2.0, 1_000_000, &mut ChaCha8Rng::seed_from_u64(31)).unwrap();
    assert!(mc.estimate >= bound - 3.0 * mc.se, "{mc:?}");
}

#[test]
fn z_offset_solves_its_equation() {
    for x in [-10.0, -1.0, 0.0, 0.5, 2.0, 10.0, 35.0] {
        let z = z_offset(x, 0.05).unwrap();
        let lhs = gauss::log_sf(x + z);
        let rhs = 0.05f64.ln() + gauss::log_sf(x);
        assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "x={x}");
    }
}

#[test]
fn z_offset_lower_bound_and_decrease() {
    for alpha in [0.05, 0.1, 0.5] {
        let mut prev = f64::INFINITY;
        let mut x: f64 = 1.01;
        while x <= 40.0 {
            let z = z_offset(x, alpha).unwrap();
            assert!(x * z >= (1.0 - alpha) / 4.0, "x={x}, alpha={alpha}: {z}");
            assert!(z < prev);
            prev = z;
            x += 0.01;
        }
        assert!(prev < 0.1);
    }
    assert!(z_offset(2.0, 0.05).unwrap() >= 0.118_75);
}

#[test]
fn z_offset_limits() {
    let want = std_normal_quantile(0.95).unwrap() + 10.0;
    assert!((z_offset(-10.0, 0.05).unwrap() - want).abs() < 1e-9);
    assert!(z_offset(1.0, 1.0 - 1e-12).unwrap() < 1e-9);
}

#[test]
fn c_eta_closed_form() {
    for i in -20..=40 {
        let eta = 0.5 * i as f64;
        let c = c_eta_check(eta).unwrap();
        assert!((c.quadrature - c.closed_form).abs() < 1e-8 * c.closed_form.clamp(1e-300, 1.0) + 1e-300);
    }
    assert!((c_eta_check(0.0).unwrap().quadrature - 0.5).abs() < 1e-12);
    let two = c_eta_check(2.0).unwrap();
    assert!((two.closed_form - 0.078_649_603_525_142_65).abs() < 1e-12);
    assert!((two.closed_form - 0.0786).abs() < 5e-5);
}

#[test]
fn c_eta_sandwich() {
    for i in 0..=60 {
        let eta = 10.0 + 0.5 * i as f64;
        let c = c_eta_check(eta).unwrap();
        assert!(c.sandwich_holds(), "eta={eta}: {c:?}");
    }
    let far = c_eta_check(38.0).unwrap().scaled.unwrap();
    assert!((far - 1.0).abs() < 2e-3, "{far}");
}

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selective_ci_core::gauss::{
    self, chi2_3_cdf, mills_ratio_bounds_check, std_normal_cdf, std_normal_log_sf, std_normal_quantile,
};
use selective_ci_core::quad::integrate;
use selective_ci_core::TruncatedNormal;

/// Mill's ratio by direct quadrature of `∫_x^∞ φ(t) dt / φ(x)` written as
/// `∫_0^∞ exp(−xs − s²/2) ds`.
fn mills_by_quadrature(x: f64) -> f64 {
    let upper = (60.0 / x.max(1e-3)).min(60.0);
    integrate(|s| (-x * s - 0.5 * s * s).exp(), 0.0, upper, 1e-300, 1e-13, 4000).unwrap()
}

#[test]
fn log_sf_ten_matches_mills_quadrature() {
    let want = gauss::log_pdf(10.0) + mills_by_quadrature(10.0).ln();
    let got = std_normal_log_sf(10.0).unwrap().value();
    assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
}

#[test]
fn log_sf_relative_accuracy_up_to_forty() {
    for i in 0..=80 {
        let z = i as f64 * 0.5;
        let want = gauss::log_pdf(z) + mills_by_quadrature(z).ln();
        let got = std_normal_log_sf(z).unwrap().value();
        assert!(((got - want) / want).abs() < 1e-12, "z={z}: {got} vs {want}");
    }
}

#[test]
fn cdf_and_sf_complement() {
    for i in -80..=80 {
        let z = i as f64 * 0.25;
        let c = std_normal_cdf(z).unwrap();
        let s = std_normal_log_sf(z).unwrap().prob();
        assert!((c + s - 1.0).abs() < 1e-15);
    }
}

#[test]
fn bonferroni_quantiles() {
    let q1 = std_normal_quantile(1.0 - 0.05 / 100.0).unwrap();
    let q2 = std_normal_quantile(1.0 - 0.005 / 100.0).unwrap();
    assert!((q1 - 3.29).abs() < 0.005 && (q1 - 3.290_526_731_491_895).abs() < 1e-12);
    assert!((q2 - 3.89).abs() < 0.005 && (q2 - 3.890_591_886_413_094).abs() < 1e-11);
}

#[test]
fn quantile_inverts_cdf() {
    for i in 1..2000 {
        let u = i as f64 / 2000.0;
        let q = std_normal_quantile(u).unwrap();
        assert!((std_normal_cdf(q).unwrap() - u).abs() < 1e-12 * u.max(1e-3));
    }
}

#[test]
fn truncated_cdf_matches_rejection_sampling() {
    let t = TruncatedNormal::new(0.0, 1.0, 2.0, f64::INFINITY).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut accepted = 0usize;
    let mut below = 0usize;
    while accepted < 1_000_000 {
        let z: f64 = rand_distr_normal(&mut rng);
        if z > 2.0 {
            accepted += 1;
            if z <= 2.5 {
                below += 1;
            }
        }
    }
    let p = below as f64 / accepted as f64;
    let se = (p * (1.0 - p) / accepted as f64).sqrt();
    assert!((t.cdf(2.5) - p).abs() < 3.0 * se, "{} vs {p}", t.cdf(2.5));
}

/// Box–Muller, so the oracle does not share code with the library.
fn rand_distr_normal<R: rand::Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[test]
fn truncated_sampler_ks() {
    let t = TruncatedNormal::new(1.0, 2.0, -0.5, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut draws: Vec<f64> = (0..100_000).map(|_| t.sample(&mut rng).unwrap()).collect();
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    let ks = draws
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let c = t.cdf(d);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.006, "ks = {ks}");
}

#[test]
fn truncated_sampler_in_extreme_tail() {
    let t = TruncatedNormal::new(0.0, 1.0, 40.0, f64::INFINITY).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let v = t.sample(&mut rng).unwrap();
        assert!((40.0..41.0).contains(&v));
    }
    assert!(t.log_mass() < -800.0);
}

#[test]
fn truncated_pdf_integrates_to_one() {
    for (mu, s, a, b) in [
        (0.0, 1.0, -1.0, 2.0),
        (3.0, 0.5, 4.0, f64::INFINITY),
        (-2.0, 2.0, f64::NEG_INFINITY, -9.0),
    ] {
        let t = TruncatedNormal::new(mu, s, a, b).unwrap();
        let lo = if a.is_finite() { a } else { mu - 40.0 * s };
        let hi = if b.is_finite() { b } else { mu + 40.0 * s };
        let lo = lo.max(mu - 40.0 * s);
        let hi = hi.min(mu + 40.0 * s).max(lo + 1e-9);
        let m = integrate(|y| t.pdf(y), lo, hi, 1e-300, 1e-12, 4000).unwrap();
        assert!((m - 1.0).abs() < 1e-8, "{m}");
    }
}

#[test]
fn untruncated_matches_plain_normal() {
    let t = TruncatedNormal::untruncated(0.0, 1.0).unwrap();
    for z in [-3.0, -0.5, 0.0, 1.2] {
        assert!((t.cdf(z) - std_normal_cdf(z).unwrap()).abs() < 1e-15);
    }
    assert!((t.quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
}

#[test]
fn support_constraint() {
    let t = TruncatedNormal::new(0.0, 1.0, 3.0, f64::INFINITY).unwrap();
    assert_eq!(t.cdf(3.0), 0.0);
    for i in 1..100 {
        assert!(t.quantile(i as f64 / 100.0).unwrap() >= 3.0);
    }
}

#[test]
fn mills_bounds_strict_on_grid() {
    let mut x = 0.01;
    while x <= 40.0 {
        let b = mills_ratio_bounds_check(x).unwrap();
        assert!(b.holds_strictly(), "x = {x}: {b:?}");
        x += 0.01;
    }
    let one = mills_ratio_bounds_check(1.0).unwrap();
    assert_eq!((one.lower, one.upper), (0.5, 1.0));
    assert!((one.ratio - 0.655_679_542_418_798_5).abs() < 1e-14);
    let ten = mills_ratio_bounds_check(10.0).unwrap();
    assert!((ten.ratio - 0.099_028_596_471_731_92).abs() < 1e-15);
    assert!((ten.lower - 10.0 / 101.0).abs() < 1e-17 && ten.upper == 0.1);
    let tiny = mills_ratio_bounds_check(1e-9).unwrap();
    assert!((tiny.ratio - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-8);
}

#[test]
fn chi2_3_identity_matches_density_quadrature() {
    let density = |z: f64| {
        if z <= 0.0 {
            0.0
        } else {
            z.sqrt() * (-0.5 * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
    };
    for i in 0..=100 {
        let x = i as f64 * 0.5;
        let want = if x == 0.0 {
            0.0
        } else {
            integrate(density, 0.0, x, 1e-15, 1e-14, 4000).unwrap()
        };
        let got = chi2_3_cdf(x).unwrap();
        assert!((got - want).abs() < 1e-10, "x={x}: {got} vs {want}");
    }
    assert!((chi2_3_cdf(4.0).unwrap() - 0.738_535_870_050_889_4).abs() < 1e-12);
}

#[test]
fn chi2_3_tail_envelope() {
    for i in 1..=40 {
        let x = 5.0 * i as f64;
        let sf = 1.0 - chi2_3_cdf(x).unwrap();
        let envelope = x.powf(1.5) * (-0.5 * x).exp();
        assert!(sf <= envelope.max(f64::MIN_POSITIVE) + 1e-16, "x={x}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn truncated_quantile_inverts_cdf(
        mu in -20.0f64..20.0,
        scale in 0.05f64..10.0,
        lower_z in -8.0f64..30.0,
        u in 0.0001f64..0.9999,
    ) {
        let lower = mu + scale * lower_z;
        let t = TruncatedNormal::new(mu, scale, lower, f64::INFINITY).unwrap();
        let q = t.quantile(u).unwrap();
        prop_assert!(q >= lower);
        prop_assert!((t.cdf(q) - u).abs() < 1e-8);
    }

    #[test]
    fn two_sided_quantile_inverts_cdf(
        mu in -5.0f64..5.0,
        a in -12.0f64..12.0,
        w in 0.01f64..6.0,
        u in 0.001f64..0.999,
    ) {
        let t = TruncatedNormal::new(mu, 1.0, mu + a, mu + a + w).unwrap();
        let q = t.quantile(u).unwrap();
        prop_assert!((t.cdf(q) - u).abs() < 1e-8);
    }

    #[test]
    fn cdf_is_monotone(z1 in -40.0f64..40.0, dz in 0.0f64..5.0) {
        prop_assert!(std_normal_cdf(z1).unwrap() <= std_normal_cdf(z1 + dz).unwrap());
        prop_assert!(std_normal_log_sf(z1).unwrap().value() >= std_normal_log_sf(z1 + dz).unwrap().value());
    }
}

//! Gaussian, truncated Gaussian and chi-square(3) primitives.
//!
//! Tail probabilities are carried in the natural-log domain. The unchecked
//! helpers in this module accept `±∞` (truncation bounds are often
//! infinite); the checked wrappers reject non-finite input.

use libm::{erf, erfc, exp, expm1, log, log1p, sqrt};
use rand::distributions::Open01;
use rand::Rng;

use crate::error::{domain, Error, Result};

/// `ln(√(2π))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// `1/√(2π)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;
/// `√(2/π)`
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Above this standardized value the survival function is evaluated through
/// the continued fraction for Mill's ratio instead of `erfc`.
const CF_SWITCH: f64 = 30.0;

/// Standard normal density.
#[inline]
pub fn pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp(-0.5 * z * z)
}

/// Log of the standard normal density.
#[inline]
pub fn log_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// `Φ(z)`; accepts infinities.
#[inline]
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// `1 − Φ(z)`; accepts infinities.
#[inline]
pub fn sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Mill's ratio `Φ(−z)/φ(z)` by backward evaluation of its continued
/// fraction. Only used for large `z`, where 40 terms are far more than
/// enough.
fn mills_cf(z: f64) -> f64 {
    let mut t = z;
    for k in (1..=40).rev() {
        t = z + k as f64 / t;
    }
    1.0 / t
}

/// `ln(1 − Φ(z))`, accurate to ~1e-14 relative over the whole line.
pub fn log_sf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < -5.0 {
        log1p(-0.5 * erfc(-z * FRAC_1_SQRT_2))
    } else if z < CF_SWITCH {
        log(0.5 * erfc(z * FRAC_1_SQRT_2))
    } else if z == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        log_pdf(z) + log(mills_cf(z))
    }
}

/// `ln Φ(z)`.
#[inline]
pub fn log_cdf(z: f64) -> f64 {
    log_sf(-z)
}

/// Mill's ratio `Φ(−z)/φ(z)` for `z ≥ 0`.
pub fn mills_ratio(z: f64) -> f64 {
    if z >= CF_SWITCH {
        mills_cf(z)
    } else {
        exp(log_sf(z) - log_pdf(z))
    }
}

/// `φ(z)/Φ(z)`, the derivative of `ln Φ(z)`.
#[inline]
pub fn inv_mills_lower(z: f64) -> f64 {
    if z > -CF_SWITCH {
        pdf(z) / cdf(z)
    } else {
        1.0 / mills_cf(-z)
    }
}

/// `ln(1 − e^d)` for `d ≤ 0`.
#[inline]
pub fn log1m_exp(d: f64) -> f64 {
    if d > -core::f64::consts::LN_2 {
        log(-expm1(d))
    } else {
        log1p(-exp(d))
    }
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + log1p(exp(lo - hi))
}

/// `ln Q(z) − ln Q(a)` for `z ≥ a`, avoiding cancellation when both are far
/// in the upper tail.
pub fn log_sf_ratio(z: f64, a: f64) -> f64 {
    if a >= CF_SWITCH && z.is_finite() {
        -0.5 * (z - a) * (z + a) + log(mills_cf(z)) - log(mills_cf(a))
    } else {
        log_sf(z) - log_sf(a)
    }
}

// Wichura (1988), algorithm AS 241 (PPND16).
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    133.141_667_891_784_377_45,
    1_971.590_950_306_551_442_7,
    13_731.693_765_509_461_125,
    45_921.953_931_549_871_457,
    67_265.770_927_008_700_853,
    33_430.575_583_588_128_105,
    2_509.080_928_730_122_672_7,
];
const B: [f64; 8] = [
    1.0,
    42.313_330_701_600_911_252,
    687.187_007_492_057_908_3,
    5_394.196_021_424_751_107_7,
    21_213.794_301_586_595_867,
    39_307.895_800_092_710_61,
    28_729.085_735_721_942_674,
    5_226.495_278_852_545_925,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    0.241_780_725_177_450_611_77,
    0.022_723_844_989_269_184_583_3,
    7.745_450_142_783_414_076_4e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    0.689_767_334_985_100_004_55,
    0.148_103_976_427_480_074_59,
    0.015_198_666_563_616_457_196_6,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    0.296_560_571_828_504_891_23,
    0.026_532_189_526_576_123_093,
    0.001_242_660_947_388_078_438_6,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_937_69,
    0.136_929_880_922_735_805_31,
    0.014_875_361_290_850_614_852_5,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

#[inline]
fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// AS 241 for a tail probability given as `ln r`, `r ≤ 0.075`; returns the
/// positive deviate `x` with `Φ(−x) = r`.
fn ppnd_tail(ln_r: f64) -> f64 {
    let r = sqrt(-ln_r);
    if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    }
}

fn ppnd_central(p: f64) -> f64 {
    let q = p - 0.5;
    let r = 0.180_625 - q * q;
    q * poly(&A, r) / poly(&B, r)
}

/// Quantile of the standard normal given `ln p` (lower-tail log
/// probability). Works for `ln p` far below the double-precision underflow
/// of `p` itself.
pub fn quantile_from_log_cdf(log_p: f64) -> f64 {
    if log_p.is_nan() || log_p > 0.0 {
        return f64::NAN;
    }
    if log_p == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if log_p == 0.0 {
        return f64::INFINITY;
    }
    const LN_0_075: f64 = -2.590_267_165_445_375;
    let ln_q = log1m_exp(log_p);
    if log_p < LN_0_075 {
        // lower tail: refine ln Φ(x) = ln p
        let mut x = -ppnd_tail(log_p);
        for _ in 0..2 {
            let f = log_cdf(x) - log_p;
            x -= f / inv_mills_lower(x);
        }
        x
    } else if ln_q < LN_0_075 {
        // upper tail: refine ln Q(x) = ln q
        let mut x = ppnd_tail(ln_q);
        for _ in 0..2 {
            let f = log_sf(x) - ln_q;
            x += f / inv_mills_lower(-x);
        }
        x
    } else {
        let p = exp(log_p);
        let mut x = ppnd_central(p);
        let f = cdf(x) - p;
        x -= f / pdf(x);
        x
    }
}

/// Quantile of the standard normal given the upper-tail log probability
/// `ln(1 − p)`.
#[inline]
pub fn quantile_from_log_sf(log_q: f64) -> f64 {
    -quantile_from_log_cdf(log_q)
}

/// `Φ⁻¹(u)` for `u ∈ (0, 1)` without argument checks.
pub fn quantile(u: f64) -> f64 {
    if u < 0.5 {
        quantile_from_log_cdf(log(u))
    } else {
        quantile_from_log_sf(log1p(-u))
    }
}

fn require_finite(what: &'static str, z: f64) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(domain(what, alloc::format!("argument must be finite, got {z}")))
    }
}

/// Log-probability newtype.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value > 1e-12 {
            return Err(domain("LogProb", alloc::format!("not a log-probability: {value}")));
        }
        Ok(Self(value.min(0.0)))
    }

    pub(crate) fn from_raw(value: f64) -> Self {
        Self(value.min(0.0))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn prob(self) -> f64 {
        exp(self.0)
    }
}

/// `Φ(z)` with domain checking.
pub fn std_normal_cdf(z: f64) -> Result<f64> {
    require_finite("std_normal_cdf", z)?;
    Ok(cdf(z))
}

/// `ln(1 − Φ(z))` with domain checking.
pub fn std_normal_log_sf(z: f64) -> Result<LogProb> {
    require_finite("std_normal_log_sf", z)?;
    Ok(LogProb::from_raw(log_sf(z)))
}

/// `Φ⁻¹(u)` with domain checking.
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(domain(
            "std_normal_quantile",
            alloc::format!("probability must lie in (0, 1), got {u}"),
        ));
    }
    Ok(quantile(u))
}

/// CDF of the chi-square distribution with 3 degrees of freedom via
/// `2Φ(√x) − 1 − √x e^{−x/2} / √(π/2)`.
pub fn chi2_3_cdf(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(domain("chi2_3_cdf", alloc::format!("argument must be ≥ 0, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let s = sqrt(x);
    Ok((erf(s * FRAC_1_SQRT_2) - s * exp(-0.5 * x) * SQRT_2_OVER_PI).max(0.0))
}

/// Upper tail `1 − F_{χ²₃}(x)` without cancellation.
pub fn chi2_3_sf(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(domain("chi2_3_sf", alloc::format!("argument must be ≥ 0, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    let s = sqrt(x);
    Ok(erfc(s * FRAC_1_SQRT_2) + s * exp(-0.5 * x) * SQRT_2_OVER_PI)
}

/// The two classical bounds on Mill's ratio together with the ratio itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MillsBounds {
    /// `x / (1 + x²)`
    pub lower: f64,
    /// `Φ(−x)/φ(x)`
    pub ratio: f64,
    /// `1 / x`
    pub upper: f64,
}

impl MillsBounds {
    pub fn holds_strictly(&self) -> bool {
        self.lower < self.ratio && self.ratio < self.upper
    }
}

/// Evaluate `x/(1+x²) < Φ(−x)/φ(x) < 1/x`. As `x → 0⁺` the upper bound
/// diverges while the ratio tends to `√(π/2)`.
pub fn mills_ratio_bounds_check(x: f64) -> Result<MillsBounds> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(
            "mills_ratio_bounds_check",
            alloc::format!("argument must be finite and > 0, got {x}"),
        ));
    }
    Ok(MillsBounds {
        lower: x / (1.0 + x * x),
        ratio: mills_ratio(x),
        upper: 1.0 / x,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Side {
    /// Window lies in the upper half: work with survival functions.
    Upper { log_sa: f64, log_sb: f64 },
    /// Window lies in the lower half: work with CDFs.
    Lower { log_ca: f64, log_cb: f64 },
    /// Window straddles zero.
    Middle { ca: f64 },
}

/// `N(mu, scale²)` restricted to `(lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    mu: f64,
    scale: f64,
    lower: f64,
    upper: f64,
    a: f64,
    b: f64,
    log_mass: f64,
    side: Side,
}

impl TruncatedNormal {
    pub fn new(mu: f64, scale: f64, lower: f64, upper: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(domain("TruncatedNormal", alloc::format!("mu must be finite, got {mu}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(domain(
                "TruncatedNormal",
                alloc::format!("scale must be > 0, got {scale}"),
            ));
        }
        if lower.is_nan() || upper.is_nan() || !(lower < upper) {
            return Err(domain(
                "TruncatedNormal",
                alloc::format!("need lower < upper, got ({lower}, {upper})"),
            ));
        }
        let a = (lower - mu) / scale;
        let b = (upper - mu) / scale;
        let (side, log_mass) = if a >= 0.0 {
            let log_sa = log_sf(a);
            let log_sb = log_sf(b);
            (Side::Upper { log_sa, log_sb }, log_sa + log1m_exp(log_sb - log_sa))
        } else if b <= 0.0 {
            let log_ca = log_cdf(a);
            let log_cb = log_cdf(b);
            (Side::Lower { log_ca, log_cb }, log_cb + log1m_exp(log_ca - log_cb))
        } else {
            let mass = 0.5 * (erf(b * FRAC_1_SQRT_2) - erf(a * FRAC_1_SQRT_2));
            (Side::Middle { ca: cdf(a) }, log(mass))
        };
        if !(log_mass > f64::NEG_INFINITY) || log_mass.is_nan() {
            return Err(Error::DegenerateTruncation {
                mu,
                scale,
                lower,
                upper,
                log_mass,
            });
        }
        Ok(Self {
            mu,
            scale,
            lower,
            upper,
            a,
            b,
            log_mass,
            side,
        })
    }

    /// Untruncated normal.
    pub fn untruncated(mu: f64, scale: f64) -> Result<Self> {
        Self::new(mu, scale, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn lower(&self) -> f64 {
        self.lower
    }
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Log of the untruncated mass of the window.
    pub fn log_mass(&self) -> f64 {
        self.log_mass
    }

    pub fn log_pdf(&self, y: f64) -> f64 {
        if !(y > self.lower && y < self.upper) {
            return f64::NEG_INFINITY;
        }
        let z = (y - self.mu) / self.scale;
        log_pdf(z) - log(self.scale) - self.log_mass
    }

    pub fn pdf(&self, y: f64) -> f64 {
        exp(self.log_pdf(y))
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y.is_nan() {
            return f64::NAN;
        }
        if y <= self.lower {
            return 0.0;
        }
        if y >= self.upper {
            return 1.0;
        }
        let z = (y - self.mu) / self.scale;
        let v = match self.side {
            Side::Upper { log_sa, .. } => exp(log_sa - self.log_mass + log1m_exp(log_sf_ratio(z, self.a))),
            Side::Lower { log_ca, .. } => {
                let log_cz = log_cdf(z);
                exp(log_cz - self.log_mass + log1m_exp(log_ca - log_cz))
            }
            Side::Middle { .. } => 0.5 * (erf(z * FRAC_1_SQRT_2) - erf(self.a * FRAC_1_SQRT_2)) / exp(self.log_mass),
        };
        v.clamp(0.0, 1.0)
    }

    /// `1 − cdf(y)` computed directly.
    pub fn sf(&self, y: f64) -> f64 {
        if y.is_nan() {
            return f64::NAN;
        }
        if y <= self.lower {
            return 1.0;
        }
        if y >= self.upper {
            return 0.0;
        }
        let z = (y - self.mu) / self.scale;
        let v = match self.side {
            Side::Upper { log_sb, .. } => {
                let log_sz = log_sf(z);
                exp(log_sz - self.log_mass + log1m_exp(log_sb - log_sz))
            }
            Side::Lower { log_cb, .. } => {
                let log_cz = log_cdf(z);
                exp(log_cb - self.log_mass + log1m_exp(log_cz - log_cb))
            }
            Side::Middle { .. } => 0.5 * (erf(self.b * FRAC_1_SQRT_2) - erf(z * FRAC_1_SQRT_2)) / exp(self.log_mass),
        };
        v.clamp(0.0, 1.0)
    }

    /// Inverse CDF, evaluated in the log domain so that windows far in a
    /// tail are handled without loss.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(domain(
                "TruncatedNormal::quantile",
                alloc::format!("probability must lie in (0, 1), got {u}"),
            ));
        }
        let z = match self.side {
            Side::Upper { log_sa, log_sb } => {
                // Q(z) = Q(a) − u·mass = Q(b) + (1 − u)·mass
                let log_sz = if u <= 0.5 {
                    log_sa + log1p(-u * exp(self.log_mass - log_sa))
                } else {
                    log_add_exp(log_sb, log1p(-u) + self.log_mass)
                };
                quantile_from_log_sf(log_sz)
            }
            Side::Lower { log_ca, log_cb } => {
                // Φ(z) = Φ(a) + u·mass = Φ(b) − (1 − u)·mass
                let log_cz = if u <= 0.5 {
                    log_add_exp(log_ca, log(u) + self.log_mass)
                } else {
                    log_cb + log1p(-(1.0 - u) * exp(self.log_mass - log_cb))
                };
                quantile_from_log_cdf(log_cz)
            }
            Side::Middle { ca } => {
                let p = ca + u * exp(self.log_mass);
                quantile(p)
            }
        };
        if z.is_nan() {
            return Err(Error::DegenerateTruncation {
                mu: self.mu,
                scale: self.scale,
                lower: self.lower,
                upper: self.upper,
                log_mass: self.log_mass,
            });
        }
        let y = self.mu + self.scale * z.clamp(self.a, self.b);
        Ok(y.clamp(self.lower, self.upper))
    }

    /// Inverse-CDF draw; O(1) regardless of how small the window's mass is.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let u: f64 = rng.sample(Open01);
        self.quantile(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_at_zero_is_half() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_log_sf(f64::INFINITY).is_err());
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(chi2_3_cdf(-1.0).is_err());
        assert!(mills_ratio_bounds_check(0.0).is_err());
    }

    #[test]
    fn quantile_two_sided_05() {
        assert!((std_normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((std_normal_cdf(1.96).unwrap() - 0.975).abs() < 5e-5);
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn log_sf_matches_high_precision_references() {
        // reference values from 40-digit arithmetic
        let refs = [
            (5.0, -15.064_998_393_988_725_736),
            (10.0, -53.231_285_150_512_470_578),
            (20.0, -203.917_155_371_097_263_94),
            (30.0, -454.321_243_956_343_197_11),
            (35.0, -616.975_101_261_922_513_47),
            (40.0, -804.608_442_013_753_788_17),
        ];
        for (z, want) in refs {
            let got = log_sf(z);
            assert!(((got - want) / want).abs() < 1e-13, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn log_quantile_inverts_deep_tails() {
        for lp in [-1e-3, -0.3, -0.7, -3.0, -50.0, -700.0, -5000.0] {
            let z = quantile_from_log_cdf(lp);
            assert!((log_cdf(z) - lp).abs() < 1e-12 * lp.abs().max(1.0), "lp={lp}");
        }
    }

    #[test]
    fn mills_limit_near_zero() {
        let m = mills_ratio_bounds_check(1e-9).unwrap();
        assert!((m.ratio - 1.253_314_137_315_500_3).abs() < 1e-8);
        assert!(m.holds_strictly());
    }

    #[test]
    fn mills_at_one_and_ten() {
        let m = mills_ratio_bounds_check(1.0).unwrap();
        assert_eq!((m.lower, m.upper), (0.5, 1.0));
        assert!((m.ratio - 0.655_679_542_418_798_5).abs() < 1e-14);
        let m = mills_ratio_bounds_check(10.0).unwrap();
        assert!((m.ratio - 0.099_028_596_471_731_92).abs() < 1e-15);
        assert!(m.holds_strictly());
    }

    #[test]
    fn truncated_support() {
        let t = TruncatedNormal::new(0.0, 1.0, 3.0, f64::INFINITY).unwrap();
        assert_eq!(t.cdf(3.0), 0.0);
        for u in [1e-12, 0.1, 0.5, 0.9, 1.0 - 1e-12] {
            assert!(t.quantile(u).unwrap() >= 3.0);
        }
    }

    #[test]
    fn untruncated_reduces_to_normal() {
        let t = TruncatedNormal::untruncated(0.0, 1.0).unwrap();
        for z in [-3.0, -0.5, 0.0, 1.2, 4.0] {
            assert!((t.cdf(z) - cdf(z)).abs() < 1e-15);
        }
        for u in [0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((t.quantile(u).unwrap() - quantile(u)).abs() < 1e-12);
        }
    }

    #[test]
    fn rare_window_has_usable_quantiles() {
        // mass of (40, 41) under N(0,1) is ~1e-350
        let t = TruncatedNormal::new(0.0, 1.0, 40.0, 41.0).unwrap();
        assert!(t.log_mass() < -800.0);
        let y = t.quantile(0.5).unwrap();
        assert!(y > 40.0 && y < 40.1);
        assert!((t.cdf(y) - 0.5).abs() < 1e-10);
        // and symmetric in the lower tail
        let t = TruncatedNormal::new(0.0, 1.0, f64::NEG_INFINITY, -45.0).unwrap();
        let y = t.quantile(0.25).unwrap();
        assert!((t.cdf(y) - 0.25).abs() < 1e-10);
    }

    #[test]
    fn degenerate_window_errors() {
        assert!(TruncatedNormal::new(0.0, 1.0, 1.0, 1.0).is_err());
        let far = TruncatedNormal::new(0.0, 1.0, 1e6, f64::INFINITY).unwrap();
        assert!(far.quantile(0.5).unwrap() >= 1e6);
        assert!(TruncatedNormal::new(0.0, 1.0, 40.0, 40.0 + 1e-300).is_err());
    }

    #[test]
    fn chi2_3_basics() {
        assert_eq!(chi2_3_cdf(0.0).unwrap(), 0.0);
        assert!((chi2_3_cdf(4.0).unwrap() - 0.738_535_870_050_889_4).abs() < 1e-14);
        let x = 50.0;
        assert!((chi2_3_cdf(x).unwrap() + chi2_3_sf(x).unwrap() - 1.0).abs() < 1e-15);
    }
}

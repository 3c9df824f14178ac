//! Bracketed root finding.

use crate::error::{Error, Result};

/// Brent's method on a sign-changing bracket `[a, b]`.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracketing {
            what: "brent",
            expansions: 0,
            lo: a,
            hi: b,
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::NoConvergence {
        what: "brent",
        iterations: max_iter,
        residual: fb,
    })
}

/// Find `[lo, hi]` with `f(lo) > 0 > f(hi)` for a decreasing `f`, starting
/// from `[lo, hi]` and doubling the step outward on whichever side fails.
pub fn bracket_decreasing<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    max_expansions: usize,
    what: &'static str,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut step = (hi - lo).max(1e-3);
    let mut expansions = 0;
    while f(lo)? <= 0.0 {
        if expansions == max_expansions {
            return Err(Error::Bracketing {
                what,
                expansions,
                lo,
                hi,
            });
        }
        hi = lo;
        lo -= step;
        step *= 2.0;
        expansions += 1;
    }
    let mut step = (hi - lo).max(1e-3);
    while f(hi)? >= 0.0 {
        if expansions == max_expansions {
            return Err(Error::Bracketing {
                what,
                expansions,
                lo,
                hi,
            });
        }
        lo = hi;
        hi += step;
        step *= 2.0;
        expansions += 1;
    }
    Ok((lo, hi))
}

/// Safeguarded Newton iteration on a decreasing `g` with `g(lo) > 0 > g(hi)`;
/// `fdf` returns `(g, g')`.
pub fn newton_decreasing<F>(mut fdf: F, mut lo: f64, mut hi: f64, x0: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = x0.clamp(lo, hi);
    for _ in 0..max_iter {
        let (g, dg) = fdf(x);
        if g == 0.0 {
            return Ok(x);
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = if dg < 0.0 { x - g / dg } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= xtol * (1.0 + x.abs()) || hi - lo <= xtol * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NoConvergence {
        what: "newton_decreasing",
        iterations: max_iter,
        residual: hi - lo,
    })
}

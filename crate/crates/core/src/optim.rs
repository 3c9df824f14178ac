//! BFGS minimisation with a backtracking Armijo line search.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    /// Stop once the infinity-norm of the gradient falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimise `f`, where `f(x, grad)` returns the objective and writes the
/// gradient. Non-finite objective values are treated as infeasible by the
/// line search.
pub fn bfgs<F>(mut f: F, x0: &[f64], opts: BfgsOptions) -> Result<Minimum>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g)?;
    if !fx.is_finite() {
        return Err(Error::NoConvergence {
            what: "bfgs (non-finite start)",
            iterations: 0,
            residual: fx,
        });
    }
    // inverse Hessian approximation, row-major
    let mut hinv = vec![0.0; n * n];
    for i in 0..n {
        hinv[i * n + i] = 1.0;
    }
    let mut dir = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut yv = vec![0.0; n];
    let mut hy = vec![0.0; n];

    for iter in 0..opts.max_iter {
        let gn = inf_norm(&g);
        if gn < opts.grad_tol {
            return Ok(Minimum {
                x,
                value: fx,
                grad_norm: gn,
                iterations: iter,
            });
        }
        for i in 0..n {
            dir[i] = -(0..n).map(|j| hinv[i * n + j] * g[j]).sum::<f64>();
        }
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            // lost descent: reset to steepest descent
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
                dir[i] = -g[i];
            }
            slope = dot(&dir, &g);
        }
        // below this predicted decrease f cannot resolve progress, so the
        // gradient norm becomes the merit function
        let flat = -slope < 1e-13 * (1.0 + fx.abs());
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            let f_new = f(&x_new, &mut g_new)?;
            let ok = if flat {
                f_new.is_finite() && inf_norm(&g_new) < gn
            } else {
                f_new.is_finite() && f_new <= fx + 1e-4 * step * slope
            };
            if ok {
                for i in 0..n {
                    s[i] = x_new[i] - x[i];
                    yv[i] = g_new[i] - g[i];
                }
                x.copy_from_slice(&x_new);
                g.copy_from_slice(&g_new);
                fx = f_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            let gn = inf_norm(&g);
            if gn < opts.grad_tol * 1e3 {
                // stalled at rounding level
                return Ok(Minimum {
                    x,
                    value: fx,
                    grad_norm: gn,
                    iterations: iter,
                });
            }
            return Err(Error::NoConvergence {
                what: "bfgs line search",
                iterations: iter,
                residual: gn,
            });
        }
        let sy = dot(&s, &yv);
        if sy > 1e-300 {
            if iter == 0 {
                let yy = dot(&yv, &yv);
                let scale = sy / yy;
                for i in 0..n {
                    hinv[i * n + i] = scale;
                }
            }
            for i in 0..n {
                hy[i] = (0..n).map(|j| hinv[i * n + j] * yv[j]).sum();
            }
            let yhy = dot(&yv, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
    }
    Err(Error::NoConvergence {
        what: "bfgs",
        iterations: opts.max_iter,
        residual: inf_norm(&g),
    })
}

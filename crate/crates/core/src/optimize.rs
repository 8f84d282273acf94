//! Box-constrained quasi-Newton minimization with finite-difference
//! gradients.
//!
//! The method is a projected BFGS: variables sitting on a bound with the
//! gradient pushing outward are held fixed, the search direction is the
//! quasi-Newton step on the remaining ones, and trial points are projected
//! back into the box during an Armijo backtracking line search. Objectives
//! signal infeasible points (failed factorizations) by returning a
//! non-finite value; such points are never accepted.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimOptions {
    pub max_iters: usize,
    /// Stop when the relative decrease of the objective falls below this.
    pub f_rel_tol: f64,
    /// Stop when the projected gradient's infinity norm falls below this.
    pub grad_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            f_rel_tol: 1e-8,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*l, *u);
    }
}

/// Projects and snaps values within rounding distance of a bound onto it.
fn project_snap(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
        let tol = 1e-9 * (u - l).abs().max(1.0);
        *v = if *v <= l + tol {
            *l
        } else if *v >= u - tol {
            *u
        } else {
            *v
        };
    }
}

/// Central differences, one-sided next to a bound or an infeasible point.
fn gradient<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    x: &[f64],
    fx: f64,
    lower: &[f64],
    upper: &[f64],
) -> Vec<f64> {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut xt = x.to_vec();
    for i in 0..n {
        let h = 1e-5 * x[i].abs().max(1.0);
        let can_up = x[i] + h <= upper[i];
        let can_down = x[i] - h >= lower[i];
        let mut eval_at = |v: f64, xt: &mut Vec<f64>| {
            xt[i] = v;
            let r = f.eval(xt);
            xt[i] = x[i];
            r
        };
        let up = if can_up {
            eval_at(x[i] + h, &mut xt)
        } else {
            f64::INFINITY
        };
        let down = if can_down {
            eval_at(x[i] - h, &mut xt)
        } else {
            f64::INFINITY
        };
        g[i] = match (up.is_finite(), down.is_finite()) {
            (true, true) => (up - down) / (2.0 * h),
            (true, false) => (up - fx) / h,
            (false, true) => (fx - down) / h,
            (false, false) => 0.0,
        };
    }
    g
}

/// Minimizes `f` over the box `[lower, upper]` starting from `x0` (projected
/// into the box). The returned point is never worse than the start.
pub fn minimize_box<F: FnMut(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &OptimOptions,
) -> Result<OptimResult> {
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "start has {n} entries but bounds have {} and {}",
            lower.len(),
            upper.len()
        )));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::InvalidParameter(
            "lower bounds must not exceed upper bounds".into(),
        ));
    }
    let mut f = Counted { f, evals: 0 };
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut fx = f.eval(&x);
    if !fx.is_finite() {
        return Ok(OptimResult {
            x,
            value: fx,
            iterations: 0,
            evaluations: f.evals,
            converged: false,
        });
    }
    let mut g = gradient(&mut f, &x, fx, lower, upper);
    let mut h_inv = identity(n);
    let mut fresh = true;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;

        let pg_norm = (0..n)
            .map(|i| ((x[i] - g[i]).clamp(lower[i], upper[i]) - x[i]).abs())
            .fold(0.0, f64::max);
        if pg_norm < opts.grad_tol {
            converged = true;
            break;
        }

        let free: Vec<bool> = (0..n)
            .map(|i| {
                let span = 1e-12 * (upper[i] - lower[i]).abs().max(1.0);
                !((x[i] <= lower[i] + span && g[i] > 0.0)
                    || (x[i] >= upper[i] - span && g[i] < 0.0))
            })
            .collect();
        let mut d = direction(&h_inv, &g, &free);
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h_inv = identity(n);
            fresh = true;
            d = direction(&h_inv, &g, &free);
            slope = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                converged = true;
                break;
            }
        }

        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut alpha = if fresh { (1.0 / dmax).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            project_snap(&mut xn, lower, upper);
            if xn == x {
                break;
            }
            let fxn = f.eval(&xn);
            let decrease: f64 = xn
                .iter()
                .zip(&x)
                .zip(&g)
                .map(|((a, b), gi)| (a - b) * gi)
                .sum();
            if fxn.is_finite() && fxn <= fx + ARMIJO * decrease {
                accepted = Some((xn, fxn));
                break;
            }
            alpha *= 0.5;
        }

        let Some((xn, fxn)) = accepted else {
            if fresh {
                break;
            }
            h_inv = identity(n);
            fresh = true;
            continue;
        };

        let rel_change = (fx - fxn).abs() / fx.abs().max(fxn.abs()).max(1.0);
        let gn = gradient(&mut f, &xn, fxn, lower, upper);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        if sy > 1e-12 * (ss * yy).sqrt() {
            if fresh {
                let scale = sy / yy;
                h_inv.iter_mut().flatten().for_each(|v| *v *= scale);
                fresh = false;
            }
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
        x = xn;
        fx = fxn;
        g = gn;
        if rel_change < opts.f_rel_tol {
            converged = true;
            break;
        }
    }

    Ok(OptimResult {
        x,
        value: fx,
        iterations,
        evaluations: f.evals,
        converged,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn direction(h_inv: &[Vec<f64>], g: &[f64], free: &[bool]) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| {
            if !free[i] {
                return 0.0;
            }
            -(0..n)
                .filter(|&j| free[j])
                .map(|j| h_inv[i][j] * g[j])
                .sum::<f64>()
        })
        .collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| h[i][j] * y[j]).sum())
        .collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    let c = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + c * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn unconstrained_minimum_inside_box() {
        let r = minimize_box(
            rosenbrock,
            &[-1.2, 1.0],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            &OptimOptions {
                f_rel_tol: 0.0,
                grad_tol: 1e-7,
                max_iters: 1000,
            },
        )
        .unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-4);
        assert_relative_eq!(r.x[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn active_bound_is_respected() {
        // minimum at (2, -1) clipped to x0 <= 1
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2) + 0.5 * x[0] * x[1];
        let r = minimize_box(
            f,
            &[0.0, 0.0],
            &[-3.0, -3.0],
            &[1.0, 3.0],
            &OptimOptions::default(),
        )
        .unwrap();
        assert_eq!(r.x[0], 1.0);
        // d/dx1 = 2(x1 + 1) + 0.5 x0 = 0 at x0 = 1
        assert_relative_eq!(r.x[1], -1.25, epsilon = 1e-5);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // infinite for x < 0.5, minimum of the smooth part at 0
        let f = |x: &[f64]| {
            if x[0] < 0.5 {
                f64::INFINITY
            } else {
                x[0] * x[0]
            }
        };
        let r = minimize_box(f, &[3.0], &[-4.0], &[4.0], &OptimOptions::default()).unwrap();
        assert!(r.value.is_finite());
        assert!(r.x[0] >= 0.5 && r.x[0] < 0.6);
    }

    #[test]
    fn never_worse_than_start_and_inside_box() {
        let f = |x: &[f64]| (x[0] * 3.0).sin() + (x[1] - 0.3).powi(2);
        let x0 = [0.2, 0.9];
        let r = minimize_box(f, &x0, &[-1.0, 0.0], &[1.0, 1.0], &OptimOptions::default()).unwrap();
        assert!(r.value <= f(&x0));
        assert!(r.x[0] >= -1.0 && r.x[0] <= 1.0 && r.x[1] >= 0.0 && r.x[1] <= 1.0);
    }

    #[test]
    fn start_outside_box_is_projected() {
        let r = minimize_box(
            |x: &[f64]| x[0],
            &[10.0],
            &[0.0],
            &[1.0],
            &OptimOptions::default(),
        )
        .unwrap();
        assert_eq!(r.x, vec![0.0]);
    }

    #[test]
    fn bad_bounds_are_rejected() {
        assert!(minimize_box(
            |x: &[f64]| x[0],
            &[0.0],
            &[1.0],
            &[0.0],
            &OptimOptions::default()
        )
        .is_err());
    }
}

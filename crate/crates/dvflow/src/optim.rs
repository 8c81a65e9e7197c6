//! Limited-memory quasi-Newton minimizer with Armijo backtracking.
//!
//! The inverse Hessian is represented by the usual two-loop recursion over a
//! short history of (step, gradient-change) pairs. Line search is plain
//! backtracking with the sufficient-decrease condition; it keeps iterate
//! values nonincreasing, which downstream checks rely on. Everything is
//! deterministic for a fixed starting point.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct OptimOptions {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub armijo_c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            grad_tol: 1e-7,
            max_iters: 20_000,
            memory: 10,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Iterate values never increased (Armijo guarantees this; recorded so
    /// reports can assert it).
    pub monotone: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the value. Non-finite values are treated as +infinity, so the
/// line search backs away from them.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &OptimOptions) -> OptimOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; n];
    let mut value = f(&x, &mut grad);
    let mut evaluations = 1;
    let mut monotone = true;

    if !value.is_finite() {
        return OptimOutcome {
            x,
            value,
            grad_norm: f64::NAN,
            iterations: 0,
            evaluations,
            converged: false,
            monotone,
        };
    }

    let mut s_hist: VecDeque<Vec<f64>> = VecDeque::with_capacity(opts.memory);
    let mut y_hist: VecDeque<Vec<f64>> = VecDeque::with_capacity(opts.memory);
    let mut rho_hist: VecDeque<f64> = VecDeque::with_capacity(opts.memory);

    let mut iterations = 0;
    while iterations < opts.max_iters {
        let gnorm = norm(&grad);
        if gnorm <= opts.grad_tol {
            return OptimOutcome {
                x,
                value,
                grad_norm: gnorm,
                iterations,
                evaluations,
                converged: true,
                monotone,
            };
        }
        iterations += 1;

        // Two-loop recursion for d = -H g.
        let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut alphas = vec![0.0; s_hist.len()];
        for idx in (0..s_hist.len()).rev() {
            let a = rho_hist[idx] * dot(&s_hist[idx], &d);
            alphas[idx] = a;
            for (dj, yj) in d.iter_mut().zip(&y_hist[idx]) {
                *dj -= a * yj;
            }
        }
        if let (Some(s), Some(y)) = (s_hist.back(), y_hist.back()) {
            let scale = dot(s, y) / dot(y, y);
            if scale.is_finite() && scale > 0.0 {
                for dj in d.iter_mut() {
                    *dj *= scale;
                }
            }
        }
        for idx in 0..s_hist.len() {
            let b = rho_hist[idx] * dot(&y_hist[idx], &d);
            let corr = alphas[idx] - b;
            for (dj, sj) in d.iter_mut().zip(&s_hist[idx]) {
                *dj += corr * sj;
            }
        }

        let mut slope = dot(&grad, &d);
        if slope >= 0.0 || slope.is_nan() {
            // History produced a non-descent direction; fall back to
            // steepest descent and drop the history.
            d = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        // Armijo backtracking from a unit step.
        let mut step = 1.0;
        let mut x_new = vec![0.0; n];
        let mut grad_new = vec![0.0; n];
        let mut value_new;
        let mut accepted = false;
        for _ in 0..opts.max_backtracks {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            value_new = f(&x_new, &mut grad_new);
            evaluations += 1;
            if value_new.is_finite() && value_new <= value + opts.armijo_c1 * step * slope {
                if value_new > value {
                    monotone = false;
                }
                let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * norm(&s) * norm(&y) {
                    if s_hist.len() == opts.memory {
                        s_hist.pop_front();
                        y_hist.pop_front();
                        rho_hist.pop_front();
                    }
                    rho_hist.push_back(1.0 / sy);
                    s_hist.push_back(s);
                    y_hist.push_back(y);
                }
                x.copy_from_slice(&x_new);
                grad.copy_from_slice(&grad_new);
                value = value_new;
                accepted = true;
                break;
            }
            step *= opts.backtrack;
        }
        if !accepted {
            // The step underflowed: either converged to line-search
            // precision or the model is stuck. Report the best iterate.
            let gnorm = norm(&grad);
            return OptimOutcome {
                x,
                value,
                grad_norm: gnorm,
                iterations,
                evaluations,
                converged: gnorm <= opts.grad_tol,
                monotone,
            };
        }
    }

    let gnorm = norm(&grad);
    OptimOutcome {
        x,
        value,
        grad_norm: gnorm,
        iterations,
        evaluations,
        converged: gnorm <= opts.grad_tol,
        monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl_converges_to_center() {
        let center = [1.0, -2.0, 0.5, 3.0];
        let out = minimize(
            |x, g| {
                let mut v = 0.0;
                for (i, &c) in center.iter().enumerate() {
                    let d = x[i] - c;
                    g[i] = 2.0 * d * (i + 1) as f64;
                    v += d * d * (i + 1) as f64;
                }
                v
            },
            &[0.0; 4],
            &OptimOptions::default(),
        );
        assert!(out.converged);
        assert!(out.monotone);
        for (xi, ci) in out.x.iter().zip(&center) {
            assert!((xi - ci).abs() < 1e-6);
        }
    }

    #[test]
    fn rosenbrock_converges() {
        let out = minimize(
            |x, g| {
                let t = x[1] - x[0] * x[0];
                g[0] = -400.0 * t * x[0] - 2.0 * (1.0 - x[0]);
                g[1] = 200.0 * t;
                100.0 * t * t + (1.0 - x[0]) * (1.0 - x[0])
            },
            &[-1.2, 1.0],
            &OptimOptions {
                grad_tol: 1e-8,
                ..Default::default()
            },
        );
        assert!(out.converged, "grad norm {}", out.grad_norm);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let out = minimize(
            |x, g| {
                g[0] = x[0];
                0.5 * x[0] * x[0]
            },
            &[0.0],
            &OptimOptions::default(),
        );
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn non_finite_start_is_flagged() {
        let out = minimize(|_x, _g| f64::NAN, &[1.0], &OptimOptions::default());
        assert!(!out.converged);
    }

    #[test]
    fn iteration_cap_flags_nonconvergence() {
        let out = minimize(
            |x, g| {
                // Shallow valley that needs many steps.
                g[0] = 4.0 * x[0].powi(3) * 1e-6;
                x[0].powi(4) * 1e-6
            },
            &[100.0],
            &OptimOptions {
                max_iters: 3,
                grad_tol: 1e-14,
                ..Default::default()
            },
        );
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }
}

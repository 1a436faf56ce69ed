//! Bound-constrained local minimizers: projected L-BFGS for smooth
//! objectives with gradients and a box-clipped Nelder–Mead simplex for
//! derivative-free ones.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::dot;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(l, h);
    }
}

/// Projected-gradient norm, zero on active bounds whose gradient points out.
fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((&xi, &gi), (&l, &h))| {
            let step = (xi - gi).clamp(l, h) - xi;
            step.abs()
        })
        .fold(0.0, f64::max)
}

/// Stopping rules of [`lbfgs_box`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    /// Largest projected-gradient step component at convergence.
    pub gtol: f64,
    /// Stop once an iteration improves `f` by less than `ftol·(1 + |f|)`.
    pub ftol: f64,
}

impl LbfgsOptions {
    pub fn new(max_iter: usize, gtol: f64, ftol: f64) -> Self {
        Self { max_iter, gtol, ftol }
    }
}

/// Minimize `f` over the box `[lo, hi]` starting at `x0` with a projected
/// L-BFGS iteration and Armijo backtracking. `f` writes its gradient into
/// the second argument and may return a non-finite value to reject a point.
/// The returned value never exceeds `f(x0)`.
pub fn lbfgs_box<F>(mut f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let LbfgsOptions { max_iter, gtol: tol, ftol } = opts;
    const MEMORY: usize = 8;
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    if !fx.is_finite() {
        return Minimum { x, value: fx, evaluations };
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut g_new = vec![0.0; n];

    for _ in 0..max_iter {
        if projected_gradient_norm(&x, &g, lo, hi) < tol {
            break;
        }
        // variables pinned at a bound by the gradient stay fixed this step
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let mut d: Vec<f64> = g.iter().zip(&free).map(|(&gi, &fr)| if fr { gi } else { 0.0 }).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        for i in 0..n {
            d[i] = if free[i] { -d[i] } else { 0.0 };
        }
        if dot(&d, &g) >= 0.0 {
            history.clear();
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
        }
        let mut step = if history.is_empty() {
            let gmax = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if gmax > 0.0 { (1.0 / gmax).min(1.0) } else { 1.0 }
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            project(&mut xn, lo, hi);
            let fn_ = f(&xn, &mut g_new);
            evaluations += 1;
            let decrease: f64 = g.iter().zip(xn.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            if fn_.is_finite() && fn_ <= fx + 1e-4 * decrease {
                accepted = Some((xn, fn_));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * libm::sqrt(dot(&y, &y) * dot(&s, &s)) {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let improvement = fx - fn_;
        x = xn;
        g.copy_from_slice(&g_new);
        fx = fn_;
        if improvement <= ftol * (1.0 + fx.abs()) {
            break;
        }
    }
    Minimum { x, value: fx, evaluations }
}

/// Nelder–Mead over the box `[lo, hi]` (every trial point is clipped into
/// the box) with at most `max_evals` evaluations of `f`.
pub fn nelder_mead_box<F>(mut f: F, x0: &[f64], step: f64, lo: &[f64], hi: &[f64], max_evals: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &mut Vec<f64>, evaluations: &mut usize| {
        project(x, lo, hi);
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut start = x0.to_vec();
    let f0 = eval(&mut start, &mut evaluations);
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), f0)];
    for i in 0..n {
        if evaluations >= max_evals {
            break;
        }
        let mut v = start.clone();
        // step inwards when the vertex would leave the box
        v[i] = if v[i] + step <= hi[i] { v[i] + step } else { v[i] - step };
        let fv = eval(&mut v, &mut evaluations);
        simplex.push((v, fv));
    }
    if simplex.len() < n + 1 {
        let best = simplex.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        return Minimum { x: best.0, value: best.1, evaluations };
    }

    while evaluations < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= 1e-14 * (1.0 + best.abs()) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, vi) in centroid.iter_mut().zip(v) {
                *c += vi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (w - c)).collect()
        };
        let mut xr = along(-1.0);
        let fr = eval(&mut xr, &mut evaluations);
        if fr < simplex[0].1 {
            if evaluations >= max_evals {
                simplex[n] = (xr, fr);
                break;
            }
            let mut xe = along(-2.0);
            let fe = eval(&mut xe, &mut evaluations);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            if evaluations >= max_evals {
                break;
            }
            let t = if fr < worst { -0.5 } else { 0.5 };
            let mut xc = along(t);
            let fc = eval(&mut xc, &mut evaluations);
            if fc < worst.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                // shrink towards the best vertex
                let best_x = simplex[0].0.clone();
                for k in 1..=n {
                    if evaluations >= max_evals {
                        break;
                    }
                    let mut v: Vec<f64> =
                        best_x.iter().zip(&simplex[k].0).map(|(b, w)| b + 0.5 * (w - b)).collect();
                    let fv = eval(&mut v, &mut evaluations);
                    simplex[k] = (v, fv);
                }
            }
        }
    }
    let best = simplex.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    Minimum { x: best.0, value: best.1, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a)
    }

    #[test]
    fn lbfgs_finds_rosenbrock_minimum() {
        let m = lbfgs_box(rosenbrock, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], LbfgsOptions::new(500, 1e-10, 1e-15));
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m);
    }

    #[test]
    fn lbfgs_respects_bounds() {
        // unconstrained minimum at (3, -2) lies outside the box
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 2.0 * (x[1] + 2.0);
            (x[0] - 3.0).powi(2) + (x[1] + 2.0).powi(2)
        };
        let m = lbfgs_box(f, &[0.5, 0.5], &[0.0, 0.0], &[1.0, 1.0], LbfgsOptions::new(100, 1e-12, 1e-15));
        assert_eq!(m.x, vec![1.0, 0.0]);
    }

    #[test]
    fn nelder_mead_quadratic_in_box() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] - 0.7).powi(2) + (x[2] - 2.0).powi(2);
        let m = nelder_mead_box(f, &[0.5, 0.5, 0.5], 0.1, &[0.0; 3], &[1.0; 3], 400);
        assert!(m.evaluations <= 400);
        assert!((m.x[0] - 0.3).abs() < 1e-3 && (m.x[1] - 0.7).abs() < 1e-3);
        assert!((m.x[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nelder_mead_budget_is_hard() {
        let mut calls = 0;
        let m = nelder_mead_box(
            |x: &[f64]| {
                calls += 1;
                x.iter().map(|v| v.sin()).sum()
            },
            &[0.5; 6],
            0.2,
            &[0.0; 6],
            &[1.0; 6],
            25,
        );
        assert!(calls <= 25 && m.evaluations == calls);
    }
}

//! BFGS with backtracking Armijo line search, plus finite-difference
//! gradients and Hessians.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZadrError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    /// Sup-norm of the gradient.
    pub gradient_tolerance: f64,
    /// Relative sup-norm of the accepted step.
    pub step_tolerance: f64,
    /// Relative decrease of the objective.
    pub function_tolerance: f64,
    pub verbose: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_tolerance: 1e-7,
            step_tolerance: 1e-13,
            function_tolerance: 1e-15,
            verbose: false,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(ZadrError::InvalidArgument("max_iterations must be >= 1".into()));
        }
        for (name, v) in [
            ("gradient_tolerance", self.gradient_tolerance),
            ("step_tolerance", self.step_tolerance),
            ("function_tolerance", self.function_tolerance),
        ] {
            if !(v > 0.0) {
                return Err(ZadrError::InvalidArgument(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationReason {
    GradientTol,
    StepTol,
    FunctionTol,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination_reason: TerminationReason,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Step used by the central-difference routines.
pub fn fd_step(x: f64) -> f64 {
    (1e-6 * x.abs()).max(1e-6)
}

pub fn finite_diff_gradient<F>(f: &F, x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut xw = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        xw[i] = x[i] + h;
        let fp = f(&xw);
        xw[i] = x[i] - h;
        let fm = f(&xw);
        xw[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(ZadrError::NonFiniteObjective);
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Central second differences of `f`, symmetrized.
pub fn numerical_hessian<F>(f: &F, x: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let n = x.len();
    let steps: Vec<f64> = x.iter().map(|&v| (1e-4 * v.abs()).max(1e-4)).collect();
    let f0 = f(x);
    if !f0.is_finite() {
        return Err(ZadrError::NonFiniteObjective);
    }
    let mut xw = x.to_vec();
    let eval = |xw: &mut Vec<f64>, moves: &[(usize, f64)]| -> Result<f64> {
        for &(i, d) in moves {
            xw[i] = x[i] + d;
        }
        let v = f(xw);
        for &(i, _) in moves {
            xw[i] = x[i];
        }
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ZadrError::NonFiniteObjective)
        }
    };
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        let hi = steps[i];
        let fp = eval(&mut xw, &[(i, hi)])?;
        let fm = eval(&mut xw, &[(i, -hi)])?;
        h[i][i] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let fpp = eval(&mut xw, &[(i, hi), (j, hj)])?;
            let fpm = eval(&mut xw, &[(i, hi), (j, -hj)])?;
            let fmp = eval(&mut xw, &[(i, -hi), (j, hj)])?;
            let fmm = eval(&mut xw, &[(i, -hi), (j, -hj)])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    Ok(h)
}

/// Jacobian of an analytic gradient by central differences, symmetrized.
/// More accurate than [`numerical_hessian`] when the gradient is available.
pub fn hessian_from_gradient<G>(grad: &G, x: &[f64]) -> Result<Vec<Vec<f64>>>
where
    G: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let n = x.len();
    let mut xw = x.to_vec();
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        let step = (1e-5 * x[i].abs()).max(1e-5);
        xw[i] = x[i] + step;
        let gp = grad(&xw);
        xw[i] = x[i] - step;
        let gm = grad(&xw);
        xw[i] = x[i];
        for j in 0..n {
            let v = (gp[j] - gm[j]) / (2.0 * step);
            if !v.is_finite() {
                return Err(ZadrError::NonFiniteObjective);
            }
            h[j][i] = v;
        }
    }
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (h[i][j] + h[j][i]);
            h[i][j] = s;
            h[j][i] = s;
        }
    }
    Ok(h)
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Minimizes `objective` from `x0`. Without an analytic gradient, central
/// finite differences are used.
pub fn minimize<F, G>(
    objective: F,
    gradient: Option<G>,
    x0: &[f64],
    opts: &OptimizerOptions,
) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    opts.validate()?;
    let n = x0.len();
    let grad = |x: &[f64]| -> Result<Vec<f64>> {
        match &gradient {
            Some(g) => {
                let v = g(x);
                if v.iter().all(|c| c.is_finite()) {
                    Ok(v)
                } else {
                    Err(ZadrError::NonFiniteObjective)
                }
            }
            None => finite_diff_gradient(&objective, x),
        }
    };

    let mut x = x0.to_vec();
    let mut fx = objective(&x);
    if !fx.is_finite() {
        return Err(ZadrError::NonFiniteObjective);
    }
    let mut g = grad(&x)?;
    // inverse Hessian approximation, row-major
    let mut hinv = identity(n);
    let mut scaled = false;

    let finish = |x: Vec<f64>, fx: f64, g: &[f64], it: usize, reason: TerminationReason| OptimResult {
        argmin: x,
        value: fx,
        gradient_norm: sup_norm(g),
        iterations: it,
        converged: reason != TerminationReason::MaxIter,
        termination_reason: reason,
    };

    if sup_norm(&g) <= opts.gradient_tolerance {
        return Ok(finish(x, fx, &g, 0, TerminationReason::GradientTol));
    }

    let mut restarted = false;
    for it in 1..=opts.max_iterations {
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&hinv[i], &g)).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            hinv = identity(n);
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }

        let mut alpha = 1.0;
        if !scaled {
            // keep the very first trial step modest
            alpha = (1.0 / sup_norm(&dir)).min(1.0);
        }
        let mut accepted = None;
        let mut xt = vec![0.0; n];
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                xt[i] = x[i] + alpha * dir[i];
            }
            let ft = objective(&xt);
            if ft.is_finite() && ft <= fx + ARMIJO_C1 * alpha * slope {
                accepted = Some(ft);
                break;
            }
            let next = if ft.is_finite() {
                // minimizer of the quadratic through f(0), f'(0), f(alpha)
                let denom = 2.0 * (ft - fx - slope * alpha);
                let a = -slope * alpha * alpha / denom;
                if a.is_finite() { a.clamp(0.1 * alpha, 0.5 * alpha) } else { 0.5 * alpha }
            } else {
                0.25 * alpha
            };
            alpha = next;
        }

        let ft = match accepted {
            Some(ft) => ft,
            None => {
                if !restarted {
                    // curvature model went bad; retry along steepest descent
                    restarted = true;
                    hinv = identity(n);
                    scaled = false;
                    continue;
                }
                if !objective(&x).is_finite() {
                    return Err(ZadrError::NonFiniteObjective);
                }
                return Ok(finish(x, fx, &g, it, TerminationReason::StepTol));
            }
        };
        restarted = false;

        let gt = grad(&xt)?;
        let s: Vec<f64> = (0..n).map(|i| xt[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gt[i] - g[i]).collect();
        let step_norm = sup_norm(&s);
        let x_norm = sup_norm(&x);
        let df = fx - ft;

        x.copy_from_slice(&xt);
        fx = ft;
        g = gt;

        if opts.verbose {
            log::debug!("bfgs iter {it}: f = {fx:.12e}, |g| = {:.3e}, alpha = {alpha:.3e}", sup_norm(&g));
        }

        if sup_norm(&g) <= opts.gradient_tolerance {
            return Ok(finish(x, fx, &g, it, TerminationReason::GradientTol));
        }
        if step_norm <= opts.step_tolerance * (1.0 + x_norm) {
            return Ok(finish(x, fx, &g, it, TerminationReason::StepTol));
        }
        if df.abs() <= opts.function_tolerance * (1.0 + fx.abs()) {
            return Ok(finish(x, fx, &g, it, TerminationReason::FunctionTol));
        }

        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if !scaled {
                let scale = sy / dot(&y, &y);
                for i in 0..n {
                    hinv[i][i] = scale;
                }
                scaled = true;
            }
            bfgs_update(&mut hinv, &s, &y, sy);
        }
    }
    Ok(finish(x, fx, &g, opts.max_iterations, TerminationReason::MaxIter))
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// `H <- (I - rho s y') H (I - rho y s') + rho s s'`
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type NoGrad = fn(&[f64]) -> Vec<f64>;

    #[test]
    fn shifted_quadratic() {
        let f = |x: &[f64]| x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>();
        let g = |x: &[f64]| x.iter().map(|v| 2.0 * (v - 1.0)).collect::<Vec<_>>();
        let r = minimize(f, Some(g), &[0.0; 5], &OptimizerOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.termination_reason, TerminationReason::GradientTol);
        for v in &r.argmin {
            assert!((v - 1.0).abs() < 1e-8);
        }
        assert!(r.value < 1e-14);
    }

    #[test]
    fn rosenbrock_without_gradient() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = OptimizerOptions { gradient_tolerance: 1e-9, ..Default::default() };
        let r = minimize(f, None::<NoGrad>, &[-1.2, 1.0], &opts).unwrap();
        assert!(r.converged);
        assert!((r.argmin[0] - 1.0).abs() < 1e-6, "{:?}", r);
        assert!((r.argmin[1] - 1.0).abs() < 1e-6, "{:?}", r);
    }

    #[test]
    fn rosenbrock_with_gradient() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = |x: &[f64]| {
            vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        };
        let opts = OptimizerOptions { gradient_tolerance: 1e-10, ..Default::default() };
        let r = minimize(f, Some(g), &[-1.2, 1.0], &opts).unwrap();
        assert!((r.argmin[0] - 1.0).abs() < 1e-6);
        assert!((r.argmin[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn max_iterations_is_reported() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = OptimizerOptions { max_iterations: 3, ..Default::default() };
        let r = minimize(f, None::<NoGrad>, &[-1.2, 1.0], &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.termination_reason, TerminationReason::MaxIter);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn recovers_from_infinite_region() {
        // -log barrier: infinite for x <= 0
        let f = |x: &[f64]| if x[0] <= 0.0 { f64::INFINITY } else { x[0] - 3.0 * x[0].ln() };
        let g = |x: &[f64]| vec![1.0 - 3.0 / x[0]];
        let r = minimize(f, Some(g), &[0.1], &OptimizerOptions::default()).unwrap();
        assert!((r.argmin[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let f = |_: &[f64]| f64::NAN;
        assert_eq!(
            minimize(f, None::<NoGrad>, &[0.0], &OptimizerOptions::default()),
            Err(ZadrError::NonFiniteObjective)
        );
    }

    #[test]
    fn invalid_options() {
        let f = |x: &[f64]| x[0] * x[0];
        let opts = OptimizerOptions { gradient_tolerance: 0.0, ..Default::default() };
        assert!(minimize(f, None::<NoGrad>, &[1.0], &opts).is_err());
    }

    #[test]
    fn finite_differences() {
        let g = finite_diff_gradient(&|x: &[f64]| x[0] * x[0], &[3.0]).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        let g = finite_diff_gradient(&|_: &[f64]| 4.2, &[1.0, -7.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        assert_eq!(
            finite_diff_gradient(&|_: &[f64]| f64::NAN, &[1.0]),
            Err(ZadrError::NonFiniteObjective)
        );
    }

    #[test]
    fn hessians_of_polynomials() {
        let h = numerical_hessian(&|x: &[f64]| x[0] * x[0], &[0.7]).unwrap();
        assert!((h[0][0] - 2.0).abs() < 1e-4);
        let h = numerical_hessian(&|x: &[f64]| x[0] * x[0] + 3.0 * x[1] * x[1], &[0.3, -1.1]).unwrap();
        assert!((h[0][0] - 2.0).abs() < 1e-4);
        assert!((h[1][1] - 6.0).abs() < 1e-4);
        assert!(h[0][1].abs() < 1e-4);
        assert_eq!(h[0][1], h[1][0]);

        let f = |x: &[f64]| x[0].powi(3) + x[0] * x[1] * x[1] - 2.0 * x[1];
        let x = [1.3, -0.4];
        let h = numerical_hessian(&f, &x).unwrap();
        let exact = [[6.0 * x[0], 2.0 * x[1]], [2.0 * x[1], 2.0 * x[0]]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[i][j] - exact[i][j]).abs() < 1e-4);
            }
        }
        let g = |x: &[f64]| vec![3.0 * x[0] * x[0] + x[1] * x[1], 2.0 * x[0] * x[1] - 2.0];
        let h2 = hessian_from_gradient(&g, &x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((h2[i][j] - exact[i][j]).abs() < 1e-7);
            }
        }
    }
}

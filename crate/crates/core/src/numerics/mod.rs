//! Special functions, unconstrained optimization and small linear-algebra
//! helpers shared by the likelihood code.

pub mod linalg;
pub mod optim;
pub mod special;

pub use optim::{
    finite_diff_gradient, hessian_from_gradient, minimize, numerical_hessian, OptimResult,
    OptimizerOptions, TerminationReason,
};
pub use special::{chi_square_sf, digamma_fn, gamma_q, lgamma_fn, trigamma_fn};

/// Linear predictors are clamped to this magnitude before exponentiation.
pub const LINEAR_PREDICTOR_CLAMP: f64 = 700.0;

/// Softmax with max-subtraction.
pub fn softmax(eta: &[f64]) -> Vec<f64> {
    let m = eta.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut out: Vec<f64> = eta.iter().map(|&e| (e - m).exp()).collect();
    let s: f64 = out.iter().sum();
    for v in &mut out {
        *v /= s;
    }
    out
}

/// `log(sum(exp(v)))` with max-subtraction.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

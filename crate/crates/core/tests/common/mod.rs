//! Shared oracles and generators for the integration tests.
//!
//! The oracle log-likelihood is written from the model definition with
//! `statrs` special functions and naive loops; it shares no code with the
//! library's likelihood kernel.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use zadr_core::compositions::{default_component_names, load_dataset};
use zadr_core::{CompositionDataset, CovariateMatrix, Precision, SubcompositionMode, ZadrModel};

/// Table-1 simple model: reference Triloba, one covariate (log depth).
pub fn reference_truth() -> ZadrModel {
    let b = DMatrix::from_row_slice(3, 2, &[-1.225, 0.117, -2.392, 0.087, -2.298, -0.046]);
    ZadrModel::from_parameters(
        b,
        Precision::Phi(15.889),
        0,
        ["Triloba", "Obesa", "Pachyderma", "Atlantica"].iter().map(|s| s.to_string()).collect(),
        vec!["(Intercept)".into(), "logdepth".into()],
    )
    .unwrap()
}

/// Design with intercept and `log(1..=30)`.
pub fn log_depth_design() -> CovariateMatrix {
    let raw = DMatrix::from_fn(30, 1, |i, _| ((i + 1) as f64).ln());
    CovariateMatrix::with_intercept(&raw, &["logdepth".to_string()]).unwrap()
}

/// Naive softmax with the reference slot at zero.
pub fn oracle_mean(x: &[f64], b: &DMatrix<f64>, ref_index: usize) -> Vec<f64> {
    let d = b.nrows() + 1;
    let mut eta = vec![0.0; d];
    for c in 0..d {
        if c == ref_index {
            continue;
        }
        let r = if c < ref_index { c } else { c - 1 };
        eta[c] = (0..x.len()).map(|j| x[j] * b[(r, j)]).sum();
    }
    let m = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = eta.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub fn oracle_phi(x: &[f64], precision: &Precision) -> f64 {
    match precision {
        Precision::Phi(p) => *p,
        Precision::Gamma(g) => x.iter().zip(g).map(|(a, b)| a * b).sum::<f64>().exp(),
    }
}

/// Row-by-row log-likelihood. `zeros = None` is the plain Dirichlet
/// likelihood; otherwise sub-composition densities plus the Bernoulli term.
pub fn oracle_loglik(
    b: &DMatrix<f64>,
    precision: &Precision,
    y: &DMatrix<f64>,
    x: &DMatrix<f64>,
    ref_index: usize,
    zeros: Option<(&[f64], SubcompositionMode)>,
) -> f64 {
    let mut total = 0.0;
    for i in 0..y.nrows() {
        let xr: Vec<f64> = (0..x.ncols()).map(|j| x[(i, j)]).collect();
        let a = oracle_mean(&xr, b, ref_index);
        let phi = oracle_phi(&xr, precision);
        let support: Vec<usize> = (0..y.ncols()).filter(|&j| y[(i, j)] > 0.0).collect();
        let s = match zeros {
            Some((_, SubcompositionMode::Renormalized)) => support.iter().map(|&j| a[j]).sum::<f64>(),
            _ => 1.0,
        };
        let mut row = ln_gamma(phi * s);
        for &j in &support {
            row += -ln_gamma(phi * a[j]) + (phi * a[j] - 1.0) * y[(i, j)].ln();
        }
        if let Some((p, _)) = zeros {
            for j in 0..y.ncols() {
                row += if y[(i, j)] > 0.0 { p[j].ln() } else { (1.0 - p[j]).ln() };
            }
        }
        total += row;
    }
    total
}

/// A random small regression instance.
pub struct Instance {
    pub ds: CompositionDataset,
    pub x: CovariateMatrix,
    pub b: DMatrix<f64>,
    pub phi: f64,
    pub gamma: Vec<f64>,
    pub p: Vec<f64>,
    pub ref_index: usize,
}

pub fn random_instance(seed: u64, max_n: usize, max_d: usize, max_p: usize, with_zeros: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let d = rng.random_range(if with_zeros { 3 } else { 2 }..=max_d.max(3));
    let p = rng.random_range(0..=max_p);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut r: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0f64..0.0).exp()).collect();
        if with_zeros && rng.random_bool(0.5) {
            // keep at least two positive parts
            let nz = rng.random_range(1..=d - 2);
            for _ in 0..nz {
                let j = rng.random_range(0..d);
                if r.iter().filter(|v| **v > 0.0).count() > 2 {
                    r[j] = 0.0;
                }
            }
        }
        let s: f64 = r.iter().sum();
        rows.push(r.iter().map(|v| v / s).collect::<Vec<f64>>());
    }
    let ds = load_dataset(&rows, &default_component_names(d), 1e-8).unwrap();
    let raw = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    let x = CovariateMatrix::with_intercept(&raw, &names).unwrap();
    let b = DMatrix::from_fn(d - 1, p + 1, |_, _| rng.random_range(-2.0..2.0));
    let phi = rng.random_range(0.5..50.0);
    let mut gamma: Vec<f64> = (0..=p).map(|_| rng.random_range(-1.0..1.0)).collect();
    gamma[0] = rng.random_range(0.0..4.0);
    let pv = (0..d).map(|_| rng.random_range(0.05..0.95)).collect();
    let ref_index = rng.random_range(0..d);
    Instance { ds, x, b, phi, gamma, p: pv, ref_index }
}

/// Central differences with a relative step.
pub fn central_diff<F: Fn(&[f64]) -> f64>(f: F, theta: &[f64]) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let h = 1e-5 * theta[i].abs().max(1.0);
            t[i] = theta[i] + h;
            let up = f(&t);
            t[i] = theta[i] - h;
            let dn = f(&t);
            t[i] = theta[i];
            (up - dn) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖∞ / max(1, ‖a‖∞)`.
pub fn rel_inf_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().map(|v| v.abs()).fold(1.0, f64::max);
    diff / scale
}

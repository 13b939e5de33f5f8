//! Dirichlet distribution in the precision parametrization `a_i = φ a*_i`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZadrError};
use crate::numerics::log_sum_exp;
use crate::numerics::special::lgamma_unchecked;
use crate::random::{rng_from_seed, ZadrRng};

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    phi: f64,
    a_star: Vec<f64>,
}

impl DirichletParams {
    pub fn new(phi: f64, a_star: Vec<f64>) -> Result<Self> {
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(ZadrError::DomainError(format!("precision must be positive, got {phi}")));
        }
        if a_star.len() < 2 {
            return Err(ZadrError::InvalidArgument("need at least two components".into()));
        }
        if a_star.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(ZadrError::DomainError("mean parameters must be positive".into()));
        }
        let s: f64 = a_star.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(ZadrError::DomainError(format!("mean parameters sum to {s}, not 1")));
        }
        Ok(Self { phi, a_star })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn a_star(&self) -> &[f64] {
        &self.a_star
    }

    /// Classical concentration parameters `φ a*_i`.
    pub fn alphas(&self) -> Vec<f64> {
        self.a_star.iter().map(|a| a * self.phi).collect()
    }
}

/// How the normalizing constant of a density over a sub-simplex is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubcompositionMode {
    /// Keeps `logΓ(φ)` for every row, exactly as the zero-adjusted
    /// likelihood is usually printed. Not a normalized density when zeros are
    /// present: it grows like `φ log φ` and has no finite maximizer.
    AsWritten,
    /// Uses `logΓ(φ Σ_{i∈C} a*_i)`, the normalizer of the marginal Dirichlet.
    #[default]
    Renormalized,
}

pub fn log_density(y: &[f64], params: &DirichletParams) -> Result<f64> {
    if y.len() != params.a_star.len() {
        return Err(ZadrError::DimensionMismatch("composition and parameter lengths differ".into()));
    }
    if let Some(v) = y.iter().find(|&&v| !(v > 0.0)) {
        return Err(ZadrError::DomainError(format!("density needs positive entries, got {v}")));
    }
    let phi = params.phi;
    let mut out = lgamma_unchecked(phi);
    for (yi, ai) in y.iter().zip(&params.a_star) {
        let alpha = phi * ai;
        out += -lgamma_unchecked(alpha) + (alpha - 1.0) * yi.ln();
    }
    Ok(out)
}

/// Log-density of the positive sub-composition `y_C`.
pub fn subcomposition_log_density(
    y: &[f64],
    params: &DirichletParams,
    nonzero: &[usize],
    mode: SubcompositionMode,
) -> Result<f64> {
    let d = params.a_star.len();
    if y.len() != d {
        return Err(ZadrError::DimensionMismatch("composition and parameter lengths differ".into()));
    }
    if nonzero.len() < 2 {
        return Err(ZadrError::DomainError("sub-composition needs at least two components".into()));
    }
    let mut in_set = vec![false; d];
    for &i in nonzero {
        if i >= d || in_set[i] {
            return Err(ZadrError::DomainError(format!("invalid index {i} in nonzero set")));
        }
        in_set[i] = true;
    }
    for i in 0..d {
        if in_set[i] != (y[i] > 0.0) {
            return Err(ZadrError::DomainError(format!(
                "component {i} = {} disagrees with the nonzero set",
                y[i]
            )));
        }
    }
    let s: f64 = nonzero.iter().map(|&i| y[i]).sum();
    if (s - 1.0).abs() > 1e-8 {
        return Err(ZadrError::DomainError(format!("sub-composition sums to {s}")));
    }
    let phi = params.phi;
    let mut out = match mode {
        SubcompositionMode::AsWritten => lgamma_unchecked(phi),
        SubcompositionMode::Renormalized => {
            lgamma_unchecked(phi * nonzero.iter().map(|&i| params.a_star[i]).sum::<f64>())
        }
    };
    for &i in nonzero {
        let alpha = phi * params.a_star[i];
        out += -lgamma_unchecked(alpha) + (alpha - 1.0) * y[i].ln();
    }
    Ok(out)
}

/// Log of a Gamma(shape, 1) variate by Marsaglia and Tsang's squeeze method.
/// Shapes below one are boosted: `G(a) = G(a + 1) U^{1/a}`, accumulated in
/// log space so tiny shapes do not underflow.
pub fn log_gamma_variate<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    let (a, boost) = if shape < 1.0 { (shape + 1.0, true) } else { (shape, false) };
    let d = a - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    let log_v = loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            break d.ln() + v.ln();
        }
    };
    if boost {
        // 1 - random() lies in (0, 1]
        let u: f64 = 1.0 - rng.random::<f64>();
        log_v + u.ln() / shape
    } else {
        log_v
    }
}

/// One Dirichlet draw with concentrations `alphas` (all positive).
pub fn sample_alphas<R: Rng + ?Sized>(rng: &mut R, alphas: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = alphas.iter().map(|&a| log_gamma_variate(rng, a)).collect();
    let lse = log_sum_exp(&logs);
    logs.iter().map(|l| (l - lse).exp()).collect()
}

/// Draws a full-length row that is zero outside `nonzero` and follows the
/// marginal Dirichlet on `nonzero`.
pub fn sample_on_support<R: Rng + ?Sized>(rng: &mut R, alphas: &[f64], nonzero: &[usize]) -> Vec<f64> {
    let sub: Vec<f64> = nonzero.iter().map(|&i| alphas[i]).collect();
    let draw = sample_alphas(rng, &sub);
    let mut row = vec![0.0; alphas.len()];
    for (k, &i) in nonzero.iter().enumerate() {
        row[i] = draw[k];
    }
    row
}

pub fn sample(params: &DirichletParams, count: usize, seed: u64) -> DMatrix<f64> {
    let mut rng: ZadrRng = rng_from_seed(seed);
    let alphas = params.alphas();
    let d = alphas.len();
    let mut out = DMatrix::zeros(count, d);
    for r in 0..count {
        let row = sample_alphas(&mut rng, &alphas);
        for j in 0..d {
            out[(r, j)] = row[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(phi: f64, a: &[f64]) -> DirichletParams {
        DirichletParams::new(phi, a.to_vec()).unwrap()
    }

    #[test]
    fn uniform_on_the_segment() {
        let v = log_density(&[0.2, 0.8], &params(2.0, &[0.5, 0.5])).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn dir_2_2_at_center() {
        // Γ(4)/Γ(2)^2 * 0.5 * 0.5 = 1.5
        let v = log_density(&[0.5, 0.5], &params(4.0, &[0.5, 0.5])).unwrap();
        assert!((v - 1.5f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn uniform_on_the_triangle() {
        let t = 1.0 / 3.0;
        let v = log_density(&[t, t, t], &params(3.0, &[t, t, t])).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn density_rejects_zeros_and_bad_params() {
        assert!(log_density(&[1.0, 0.0], &params(2.0, &[0.5, 0.5])).is_err());
        assert!(DirichletParams::new(0.0, vec![0.5, 0.5]).is_err());
        assert!(DirichletParams::new(1.0, vec![0.5, 0.6]).is_err());
        assert!(DirichletParams::new(1.0, vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn subcomposition_full_set_matches_density() {
        let p = params(7.5, &[0.2, 0.3, 0.5]);
        let y = [0.1, 0.6, 0.3];
        let full = log_density(&y, &p).unwrap();
        for mode in [SubcompositionMode::AsWritten, SubcompositionMode::Renormalized] {
            let v = subcomposition_log_density(&y, &p, &[0, 1, 2], mode).unwrap();
            assert!((v - full).abs() < 1e-13);
        }
    }

    #[test]
    fn subcomposition_modes_on_a_zero_row() {
        let t = 1.0 / 3.0;
        let p = params(3.0, &[t, t, t]);
        let y = [0.6, 0.4, 0.0];
        let renorm = subcomposition_log_density(&y, &p, &[0, 1], SubcompositionMode::Renormalized).unwrap();
        assert!(renorm.abs() < 1e-13);
        let written = subcomposition_log_density(&y, &p, &[0, 1], SubcompositionMode::AsWritten).unwrap();
        assert!((written - 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn subcomposition_support_violations() {
        let p = params(3.0, &[0.2, 0.3, 0.5]);
        let m = SubcompositionMode::AsWritten;
        assert!(subcomposition_log_density(&[0.6, 0.4, 0.0], &p, &[0, 2], m).is_err());
        assert!(subcomposition_log_density(&[1.0, 0.0, 0.0], &p, &[0], m).is_err());
        assert!(subcomposition_log_density(&[0.5, 0.2, 0.3], &p, &[0, 1], m).is_err());
    }

    #[test]
    fn two_part_renormalized_equals_beta() {
        let p = params(9.0, &[0.1, 0.3, 0.6]);
        let y = [0.0, 0.35, 0.65];
        let v = subcomposition_log_density(&y, &p, &[1, 2], SubcompositionMode::Renormalized).unwrap();
        let beta = statrs::distribution::Beta::new(2.7, 5.4).unwrap();
        use statrs::distribution::Continuous;
        assert!((v - beta.ln_pdf(0.35)).abs() < 1e-12);
    }

    #[test]
    fn permutation_invariance() {
        let p = params(5.0, &[0.2, 0.3, 0.5]);
        let q = params(5.0, &[0.5, 0.2, 0.3]);
        let a = log_density(&[0.1, 0.6, 0.3], &p).unwrap();
        let b = log_density(&[0.3, 0.1, 0.6], &q).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn sampling_is_deterministic_and_on_the_simplex() {
        let p = params(10.0, &[0.2, 0.2, 0.6]);
        let a = sample(&p, 500, 42);
        let b = sample(&p, 500, 42);
        assert_eq!(a, b);
        assert_ne!(a, sample(&p, 500, 43));
        for r in 0..a.nrows() {
            assert!(a.row(r).iter().all(|&v| v > 0.0));
            assert!((a.row(r).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_shapes_stay_positive() {
        let p = params(0.05, &[0.5, 0.5]);
        let draws = sample(&p, 200, 1);
        assert!(draws.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn gamma_variate_moments() {
        let mut rng = rng_from_seed(3);
        for &shape in &[0.3, 1.0, 4.5] {
            let n = 100_000;
            let xs: Vec<f64> = (0..n).map(|_| log_gamma_variate(&mut rng, shape).exp()).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            // Var = shape, so se of the mean is sqrt(shape / n)
            assert!((mean - shape).abs() < 4.0 * (shape / n as f64).sqrt(), "shape {shape}: {mean}");
        }
    }
}

//! Plain and zero-adjusted Dirichlet regression log-likelihoods and their
//! analytic gradients.
//!
//! Free parameters are laid out as `vec(B)` (row-major, one block of `p+1`
//! coefficients per non-reference component) followed by the precision
//! block: `φ` for the simple model or `γ` (length `p+1`) for the mixed one.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::link::{binary_log_prob, clamped_predictor, coef_row, linear_predictors, LinkSpec, ModelKind};
use crate::compositions::{CompositionDataset, CovariateMatrix, ZeroPattern};
use crate::dirichlet::SubcompositionMode;
use crate::error::{Result, ZadrError};
use crate::numerics::softmax;
use crate::numerics::special::{digamma_unchecked, lgamma_unchecked};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Phi(f64),
    Gamma(Vec<f64>),
}

impl Precision {
    pub fn kind(&self) -> ModelKind {
        match self {
            Precision::Phi(_) => ModelKind::Simple,
            Precision::Gamma(_) => ModelKind::Mixed,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Precision::Phi(_) => 1,
            Precision::Gamma(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_vec(&self) -> Vec<f64> {
        match self {
            Precision::Phi(p) => vec![*p],
            Precision::Gamma(g) => g.clone(),
        }
    }
}

/// Number of free parameters for `d` non-reference components and `k = p+1`
/// design columns.
pub fn num_params(kind: ModelKind, d: usize, k: usize) -> usize {
    d * k
        + match kind {
            ModelKind::Simple => 1,
            ModelKind::Mixed => k,
        }
}

pub fn pack_params(b: &DMatrix<f64>, precision: &Precision) -> Vec<f64> {
    let mut out = Vec::with_capacity(b.len() + precision.len());
    for r in 0..b.nrows() {
        out.extend(b.row(r).iter());
    }
    out.extend(precision.as_vec());
    out
}

pub fn unpack_params(theta: &[f64], kind: ModelKind, d: usize, k: usize) -> Result<(DMatrix<f64>, Precision)> {
    if theta.len() != num_params(kind, d, k) {
        return Err(ZadrError::DimensionMismatch(format!(
            "{} parameters, expected {}",
            theta.len(),
            num_params(kind, d, k)
        )));
    }
    let b = DMatrix::from_row_slice(d, k, &theta[..d * k]);
    let precision = match kind {
        ModelKind::Simple => Precision::Phi(theta[d * k]),
        ModelKind::Mixed => Precision::Gamma(theta[d * k..].to_vec()),
    };
    Ok((b, precision))
}

/// Rows, their observed components and cached logs, bound to a design.
pub(crate) struct LikelihoodData {
    x: DMatrix<f64>,
    log_y: DMatrix<f64>,
    sets: Vec<Vec<usize>>,
    full: Vec<bool>,
    ref_index: usize,
    mode: SubcompositionMode,
}

impl LikelihoodData {
    /// `rows` selects the rows that enter; `zp = None` demands zero-free rows.
    pub(crate) fn new(
        ds: &CompositionDataset,
        x: &CovariateMatrix,
        zp: Option<&ZeroPattern>,
        rows: Option<&[usize]>,
        ref_index: usize,
        mode: SubcompositionMode,
    ) -> Result<Self> {
        let n = ds.n();
        let d = ds.num_components();
        if x.n() != n {
            return Err(ZadrError::DimensionMismatch(format!(
                "{n} composition rows but {} covariate rows",
                x.n()
            )));
        }
        if ref_index >= d {
            return Err(ZadrError::InvalidArgument(format!("reference component {ref_index} out of range")));
        }
        if let Some(zp) = zp {
            if zp.n() != n || zp.num_components() != d {
                return Err(ZadrError::DimensionMismatch("zero pattern does not match dataset".into()));
            }
        }
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..n).collect();
                &all
            }
        };
        let values = ds.values();
        let mut sets = Vec::with_capacity(rows.len());
        let mut full = Vec::with_capacity(rows.len());
        for &i in rows {
            let set: Vec<usize> = match zp {
                Some(zp) => {
                    let s = zp.nonzero_sets[i].clone();
                    if s.iter().any(|&j| !(values[(i, j)] > 0.0))
                        || (0..d).filter(|&j| values[(i, j)] > 0.0).count() != s.len()
                    {
                        return Err(ZadrError::DomainError(format!("row {i}: zero pattern inconsistent with data")));
                    }
                    s
                }
                None => {
                    if let Some(j) = (0..d).find(|&j| !(values[(i, j)] > 0.0)) {
                        return Err(ZadrError::DomainError(format!(
                            "row {i}, component {j} is zero; use the zero-adjusted likelihood"
                        )));
                    }
                    (0..d).collect()
                }
            };
            full.push(set.len() == d);
            sets.push(set);
        }
        let log_y = DMatrix::from_fn(rows.len(), d, |r, j| {
            let v = values[(rows[r], j)];
            if v > 0.0 { v.ln() } else { 0.0 }
        });
        Ok(Self {
            x: x.design().select_rows(rows.iter()),
            log_y,
            sets,
            full,
            ref_index,
            mode,
        })
    }

    pub(crate) fn num_components(&self) -> usize {
        self.log_y.ncols()
    }

    pub(crate) fn num_design_cols(&self) -> usize {
        self.x.ncols()
    }

    pub(crate) fn num_rows(&self) -> usize {
        self.log_y.nrows()
    }

    /// Dirichlet part of the log-likelihood and optionally its gradient with
    /// respect to the natural parameters `(vec B, φ | γ)`.
    pub(crate) fn evaluate(&self, b: &DMatrix<f64>, precision: &Precision, want_grad: bool) -> (f64, Option<Vec<f64>>) {
        let d = self.num_components();
        let k = self.num_design_cols();
        let npar = b.len() + precision.len();
        let mut grad = if want_grad { Some(vec![0.0; npar]) } else { None };
        let mut total = 0.0;
        let mut eta = vec![0.0; d];
        let mut g = vec![0.0; d];
        let prec_off = b.len();

        for r in 0..self.num_rows() {
            let x_row: Vec<f64> = self.x.row(r).iter().copied().collect();
            linear_predictors(&x_row, b, self.ref_index, &mut eta);
            let a = softmax(&eta);
            let (phi, clamped) = match precision {
                Precision::Phi(p) => (*p, false),
                Precision::Gamma(gamma) => {
                    let (lp, c) = clamped_predictor(&x_row, gamma);
                    (lp.exp(), c)
                }
            };
            let set = &self.sets[r];
            let renorm = self.mode == SubcompositionMode::Renormalized && !self.full[r];
            let s_c: f64 = if renorm { set.iter().map(|&i| a[i]).sum() } else { 1.0 };

            let mut value = if renorm { lgamma_unchecked(phi * s_c) } else { lgamma_unchecked(phi) };
            for &i in set {
                let alpha = phi * a[i];
                value += -lgamma_unchecked(alpha) + (alpha - 1.0) * self.log_y[(r, i)];
            }
            total += value;

            if let Some(grad) = grad.as_mut() {
                let psi_norm = if renorm { digamma_unchecked(phi * s_c) } else { 0.0 };
                g.iter_mut().for_each(|v| *v = 0.0);
                let mut dphi = if renorm { s_c * psi_norm } else { digamma_unchecked(phi) };
                for &i in set {
                    let t = self.log_y[(r, i)] - digamma_unchecked(phi * a[i]);
                    g[i] = phi * (t + psi_norm);
                    dphi += a[i] * t;
                }
                let mean_g: f64 = (0..d).map(|i| g[i] * a[i]).sum();
                for c in 0..d {
                    if c == self.ref_index {
                        continue;
                    }
                    let deta = a[c] * (g[c] - mean_g);
                    let off = coef_row(c, self.ref_index) * k;
                    for j in 0..k {
                        grad[off + j] += deta * x_row[j];
                    }
                }
                match precision {
                    Precision::Phi(_) => grad[prec_off] += dphi,
                    Precision::Gamma(_) => {
                        if !clamped {
                            for j in 0..k {
                                grad[prec_off + j] += dphi * phi * x_row[j];
                            }
                        }
                    }
                }
            }
        }
        if !total.is_finite() {
            total = f64::NEG_INFINITY;
        }
        (total, grad)
    }
}

fn check_shapes(b: &DMatrix<f64>, precision: &Precision, ds: &CompositionDataset, x: &CovariateMatrix) -> Result<()> {
    if b.nrows() + 1 != ds.num_components() {
        return Err(ZadrError::DimensionMismatch(format!(
            "coefficient matrix has {} rows for {} components",
            b.nrows(),
            ds.num_components()
        )));
    }
    if b.ncols() != x.design().ncols() {
        return Err(ZadrError::DimensionMismatch(format!(
            "coefficient matrix has {} columns for {} design columns",
            b.ncols(),
            x.design().ncols()
        )));
    }
    match precision {
        Precision::Phi(phi) => {
            if !(*phi > 0.0) || !phi.is_finite() {
                return Err(ZadrError::DomainError(format!("precision must be positive, got {phi}")));
            }
        }
        Precision::Gamma(g) => {
            if g.len() != x.design().ncols() {
                return Err(ZadrError::DimensionMismatch(format!(
                    "gamma has {} entries for {} design columns",
                    g.len(),
                    x.design().ncols()
                )));
            }
        }
    }
    Ok(())
}

fn binary_total(zp: &ZeroPattern, p: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for row in &zp.u {
        total += binary_log_prob(row, p)?;
    }
    Ok(total)
}

/// Sum of `log b(u_i | p)` over all rows.
pub fn binary_loglik(zp: &ZeroPattern, p: &[f64]) -> Result<f64> {
    binary_total(zp, p)
}

fn plain(b: &DMatrix<f64>, precision: Precision, ds: &CompositionDataset, x: &CovariateMatrix, link: &LinkSpec) -> Result<f64> {
    check_shapes(b, &precision, ds, x)?;
    let data = LikelihoodData::new(ds, x, None, None, link.ref_index, SubcompositionMode::AsWritten)?;
    Ok(data.evaluate(b, &precision, false).0)
}

#[allow(clippy::too_many_arguments)]
fn adjusted(
    b: &DMatrix<f64>,
    precision: Precision,
    p: &[f64],
    ds: &CompositionDataset,
    x: &CovariateMatrix,
    zp: &ZeroPattern,
    link: &LinkSpec,
    mode: SubcompositionMode,
) -> Result<f64> {
    check_shapes(b, &precision, ds, x)?;
    if p.len() != ds.num_components() {
        return Err(ZadrError::DimensionMismatch("p has the wrong length".into()));
    }
    let data = LikelihoodData::new(ds, x, Some(zp), None, link.ref_index, mode)?;
    Ok(data.evaluate(b, &precision, false).0 + binary_total(zp, p)?)
}

/// Dirichlet regression log-likelihood with a single precision `φ`.
/// The dataset must be zero-free.
pub fn loglik_simple(b: &DMatrix<f64>, phi: f64, ds: &CompositionDataset, x: &CovariateMatrix, link: &LinkSpec) -> Result<f64> {
    plain(b, Precision::Phi(phi), ds, x, link)
}

/// As [`loglik_simple`] with row precision `exp(x'γ)`.
pub fn loglik_mixed(b: &DMatrix<f64>, gamma: &[f64], ds: &CompositionDataset, x: &CovariateMatrix, link: &LinkSpec) -> Result<f64> {
    plain(b, Precision::Gamma(gamma.to_vec()), ds, x, link)
}

/// Zero-adjusted log-likelihood: sub-composition densities over the observed
/// components plus the Bernoulli zero-pattern term.
#[allow(clippy::too_many_arguments)]
pub fn loglik_zadr_simple(
    b: &DMatrix<f64>,
    phi: f64,
    p: &[f64],
    ds: &CompositionDataset,
    x: &CovariateMatrix,
    zp: &ZeroPattern,
    link: &LinkSpec,
    mode: SubcompositionMode,
) -> Result<f64> {
    adjusted(b, Precision::Phi(phi), p, ds, x, zp, link, mode)
}

#[allow(clippy::too_many_arguments)]
pub fn loglik_zadr_mixed(
    b: &DMatrix<f64>,
    gamma: &[f64],
    p: &[f64],
    ds: &CompositionDataset,
    x: &CovariateMatrix,
    zp: &ZeroPattern,
    link: &LinkSpec,
    mode: SubcompositionMode,
) -> Result<f64> {
    adjusted(b, Precision::Gamma(gamma.to_vec()), p, ds, x, zp, link, mode)
}

/// Gradient of the selected log-likelihood with respect to the packed free
/// parameters. With `zp = None` the plain likelihood is differentiated and
/// the data must be zero-free; otherwise the zero-adjusted one (the
/// zero-pattern term does not depend on the parameters).
pub fn analytic_gradient(
    params: &[f64],
    ds: &CompositionDataset,
    x: &CovariateMatrix,
    zp: Option<&ZeroPattern>,
    link: &LinkSpec,
    mode: SubcompositionMode,
) -> Result<Vec<f64>> {
    let d = ds.num_components() - 1;
    let k = x.design().ncols();
    let (b, precision) = unpack_params(params, link.model_kind, d, k)?;
    check_shapes(&b, &precision, ds, x)?;
    let data = LikelihoodData::new(ds, x, zp, None, link.ref_index, mode)?;
    let (_, grad) = data.evaluate(&b, &precision, true);
    let grad = grad.expect("gradient requested");
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(ZadrError::DomainError("gradient is not finite at these parameters".into()));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compositions::{load_dataset, zero_pattern};

    fn ds(rows: &[Vec<f64>]) -> CompositionDataset {
        let d = rows[0].len();
        load_dataset(rows, &crate::compositions::default_component_names(d), 1e-8).unwrap()
    }

    #[test]
    fn uniform_examples() {
        let link = LinkSpec::default();
        let x = CovariateMatrix::intercept_only(1).unwrap();
        let v = loglik_simple(&DMatrix::zeros(1, 1), 2.0, &ds(&[vec![0.5, 0.5]]), &x, &link).unwrap();
        assert!(v.abs() < 1e-14);
        let t = 1.0 / 3.0;
        let v = loglik_simple(&DMatrix::zeros(2, 1), 3.0, &ds(&[vec![t, t, t]]), &x, &link).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-13);
        let v = loglik_mixed(&DMatrix::zeros(1, 1), &[2f64.ln()], &ds(&[vec![0.5, 0.5]]), &x, &link).unwrap();
        assert!(v.abs() < 1e-13);
    }

    #[test]
    fn zero_rows_rejected_by_plain_likelihood() {
        let link = LinkSpec::default();
        let x = CovariateMatrix::intercept_only(1).unwrap();
        let r = loglik_simple(&DMatrix::zeros(2, 1), 3.0, &ds(&[vec![0.6, 0.4, 0.0]]), &x, &link);
        assert!(matches!(r, Err(ZadrError::DomainError(_))));
    }

    #[test]
    fn single_zero_row_hand_value() {
        // log 2 from the as-written normalizer, log 0.5 from the pattern term
        let link = LinkSpec::default();
        let x = CovariateMatrix::intercept_only(1).unwrap();
        let data = ds(&[vec![0.6, 0.4, 0.0]]);
        let zp = zero_pattern(&data);
        let v = loglik_zadr_simple(
            &DMatrix::zeros(2, 1),
            3.0,
            &[1.0, 1.0, 0.5],
            &data,
            &x,
            &zp,
            &link,
            SubcompositionMode::AsWritten,
        )
        .unwrap();
        assert!(v.abs() < 1e-13);
    }

    #[test]
    fn pack_roundtrip_layout() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let theta = pack_params(&b, &Precision::Gamma(vec![5.0, 6.0]));
        assert_eq!(theta, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let (b2, p2) = unpack_params(&theta, ModelKind::Mixed, 2, 2).unwrap();
        assert_eq!(b2, b);
        assert_eq!(p2, Precision::Gamma(vec![5.0, 6.0]));
        assert!(unpack_params(&theta, ModelKind::Simple, 2, 2).is_err());
    }
}

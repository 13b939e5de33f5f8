use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZadrError};
use crate::numerics::linalg::symmetric_inverse;
use crate::zadr::{Precision, ZadrModel};

/// Quadratic-form comparison of the zero-free and final estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticResult {
    pub t: f64,
    /// `[θ, vec(ΔB)]`: precision differences first, then coefficient differences.
    pub delta: Vec<f64>,
    /// `V_ini + V` in the same order as `delta`.
    pub sigma2: DMatrix<f64>,
    pub sigma_pseudo: bool,
    pub pvalue: Option<f64>,
    pub replicates: usize,
    pub failures: usize,
    pub seed: Option<u64>,
}

/// Permutation taking the packed order `(vec B, precision)` to `(precision, vec B)`.
fn precision_first(num_b: usize, num_prec: usize) -> Vec<usize> {
    (num_b..num_b + num_prec).chain(0..num_b).collect()
}

/// `δ' Σ⁻¹ δ` for an arbitrary covariance, using a pseudo-inverse when `Σ` is
/// ill-conditioned. Returns the statistic and whether truncation happened.
pub fn quadratic_form(delta: &[f64], sigma: &DMatrix<f64>) -> Result<(f64, bool)> {
    if sigma.nrows() != delta.len() || sigma.ncols() != delta.len() {
        return Err(ZadrError::DimensionMismatch("delta and covariance sizes differ".into()));
    }
    let inv = symmetric_inverse(sigma)?;
    if inv.pseudo {
        log::warn!("combined covariance is singular or ill-conditioned; using a pseudo-inverse");
    }
    let v = DVector::from_column_slice(delta);
    Ok(((v.transpose() * &inv.inverse * &v)[(0, 0)], inv.pseudo))
}

pub fn diagnostic_t(initial: &ZadrModel, final_model: &ZadrModel) -> Result<DiagnosticResult> {
    let same_kind = matches!(
        (&initial.precision, &final_model.precision),
        (Precision::Phi(_), Precision::Phi(_)) | (Precision::Gamma(_), Precision::Gamma(_))
    );
    if !same_kind
        || initial.b.shape() != final_model.b.shape()
        || initial.precision.len() != final_model.precision.len()
        || initial.link.ref_index != final_model.link.ref_index
        || initial.covariance.shape() != final_model.covariance.shape()
    {
        return Err(ZadrError::KindMismatch);
    }
    let num_b = initial.b.len();
    let num_prec = initial.precision.len();
    let order = precision_first(num_b, num_prec);

    let ini = initial.params();
    let fin = final_model.params();
    let delta: Vec<f64> = order.iter().map(|&i| ini[i] - fin[i]).collect();
    let combined = &initial.covariance + &final_model.covariance;
    let np = order.len();
    let sigma2 = DMatrix::from_fn(np, np, |r, c| combined[(order[r], order[c])]);

    let (t, sigma_pseudo) = if delta.iter().all(|&v| v == 0.0) {
        (0.0, false)
    } else {
        quadratic_form(&delta, &sigma2)?
    };
    Ok(DiagnosticResult {
        t,
        delta,
        sigma2,
        sigma_pseudo,
        pvalue: None,
        replicates: 0,
        failures: 0,
        seed: None,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticDocument {
    #[serde(rename = "T")]
    pub t: f64,
    pub delta: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub sigma_pseudo: bool,
    pub pvalue: Option<f64>,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub failures: usize,
    pub seed: Option<u64>,
    pub library_version: String,
}

impl DiagnosticResult {
    pub fn to_document(&self) -> DiagnosticDocument {
        let n = self.sigma2.nrows();
        DiagnosticDocument {
            t: self.t,
            delta: self.delta.clone(),
            sigma2: (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| self.sigma2[(r, c)]).collect(),
            sigma_pseudo: self.sigma_pseudo,
            pvalue: self.pvalue,
            replicates: self.replicates,
            failures: self.failures,
            seed: self.seed,
            library_version: crate::zadr::LIBRARY_VERSION.to_string(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_form_identity() {
        let (t, pseudo) = quadratic_form(&[1.0, 2.0], &DMatrix::identity(2, 2)).unwrap();
        assert!((t - 5.0).abs() < 1e-14);
        assert!(!pseudo);
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let (t, _) = quadratic_form(&[1.0, 1.0], &s).unwrap();
        assert!((t - 2.5).abs() < 1e-14);
    }

    #[test]
    fn reorder_puts_precision_first() {
        assert_eq!(precision_first(4, 2), vec![4, 5, 0, 1, 2, 3]);
    }
}

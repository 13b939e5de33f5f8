//! Least-squares regression on alr coordinates, fitted to zero-free rows.
//! A baseline for comparison; it has no mechanism for zeros.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fit::ols_init;
use super::link::{link_alpha, LinkSpec, ModelKind};
use crate::compositions::{alr_matrix, zero_pattern, CompositionDataset, CovariateMatrix};
use crate::error::{Result, ZadrError};
use crate::numerics::linalg::least_squares;

pub const AITCHISON_KIND: &str = "aitchison-ols";

#[derive(Debug, Clone, PartialEq)]
pub struct AitchisonModel {
    /// `d x (p+1)`, same layout as the Dirichlet models.
    pub b: DMatrix<f64>,
    /// Standard errors of `b`, same shape.
    pub standard_errors: DMatrix<f64>,
    /// `d x d` residual covariance on the alr scale.
    pub residual_covariance: DMatrix<f64>,
    pub ref_index: usize,
    pub rows_used: usize,
    pub component_names: Vec<String>,
    pub covariate_names: Vec<String>,
}

pub fn fit_aitchison(ds: &CompositionDataset, x: &CovariateMatrix, ref_index: usize) -> Result<AitchisonModel> {
    let zp = zero_pattern(ds);
    let rows = zp.zero_free_rows();
    if rows.is_empty() {
        return Err(ZadrError::NoZeroFreeRows);
    }
    let ds_zf = ds.select_rows(&rows);
    let x_zf = x.select_rows(&rows);
    let k = x.design().ncols();
    let n = rows.len();
    if n <= k {
        return Err(ZadrError::InsufficientRows { needed: k + 1, found: n });
    }
    let link = LinkSpec::new(ref_index, ModelKind::Simple);
    let b = ols_init(&ds_zf, &x_zf, &link)?;
    let z = alr_matrix(ds_zf.values(), ref_index)?;
    let (_, xtx_inv) = least_squares(x_zf.design(), &z)?;
    let resid = &z - x_zf.design() * b.transpose();
    let residual_covariance = resid.transpose() * &resid / (n - k) as f64;
    let d = b.nrows();
    let standard_errors =
        DMatrix::from_fn(d, k, |c, j| (residual_covariance[(c, c)] * xtx_inv[(j, j)]).max(0.0).sqrt());
    Ok(AitchisonModel {
        b,
        standard_errors,
        residual_covariance,
        ref_index,
        rows_used: n,
        component_names: ds.component_names().to_vec(),
        covariate_names: x.covariate_names().to_vec(),
    })
}

impl AitchisonModel {
    /// Back-transformed fitted compositions.
    pub fn fitted_values(&self, x: &CovariateMatrix) -> Result<CompositionDataset> {
        if x.design().ncols() != self.b.ncols() {
            return Err(ZadrError::SchemaMismatch("design width differs from model".into()));
        }
        let d = self.b.nrows() + 1;
        let mut out = DMatrix::zeros(x.n(), d);
        for i in 0..x.n() {
            let a = link_alpha(&x.row(i), &self.b, self.ref_index)?;
            for j in 0..d {
                out[(i, j)] = a[j];
            }
        }
        CompositionDataset::new(
            out,
            self.component_names.clone(),
            crate::compositions::default_row_ids(x.n()),
            1e-8,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let flat = |m: &DMatrix<f64>| -> Vec<f64> {
            (0..m.nrows()).flat_map(|r| m.row(r).iter().copied().collect::<Vec<_>>()).collect()
        };
        let doc = AitchisonDocument {
            model_kind: AITCHISON_KIND.to_string(),
            ref_index: self.ref_index,
            component_names: self.component_names.clone(),
            covariate_names: self.covariate_names.clone(),
            b: flat(&self.b),
            standard_errors: flat(&self.standard_errors),
            residual_covariance: flat(&self.residual_covariance),
            rows_used: self.rows_used,
            library_version: super::persist::LIBRARY_VERSION.to_string(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: AitchisonDocument = serde_json::from_str(s)?;
        if doc.model_kind != AITCHISON_KIND {
            return Err(ZadrError::SchemaMismatch(format!("not an {AITCHISON_KIND} model")));
        }
        let d = doc.component_names.len().saturating_sub(1);
        let k = doc.covariate_names.len();
        if d == 0 || doc.b.len() != d * k || doc.standard_errors.len() != d * k || doc.residual_covariance.len() != d * d
        {
            return Err(ZadrError::SchemaMismatch("inconsistent aitchison model dimensions".into()));
        }
        Ok(Self {
            b: DMatrix::from_row_slice(d, k, &doc.b),
            standard_errors: DMatrix::from_row_slice(d, k, &doc.standard_errors),
            residual_covariance: DMatrix::from_row_slice(d, d, &doc.residual_covariance),
            ref_index: doc.ref_index,
            rows_used: doc.rows_used,
            component_names: doc.component_names,
            covariate_names: doc.covariate_names,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AitchisonDocument {
    model_kind: String,
    ref_index: usize,
    component_names: Vec<String>,
    covariate_names: Vec<String>,
    #[serde(rename = "B")]
    b: Vec<f64>,
    standard_errors: Vec<f64>,
    residual_covariance: Vec<f64>,
    rows_used: usize,
    library_version: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_zero_free_rows_only() {
        let rows = vec![
            vec![0.2, 0.3, 0.5],
            vec![0.4, 0.4, 0.2],
            vec![0.1, 0.6, 0.3],
            vec![0.5, 0.5, 0.0],
            vec![0.3, 0.3, 0.4],
        ];
        let ds = crate::compositions::load_dataset(&rows, &crate::compositions::default_component_names(3), 1e-8)
            .unwrap();
        let x = CovariateMatrix::intercept_only(5).unwrap();
        let m = fit_aitchison(&ds, &x, 0).unwrap();
        assert_eq!(m.rows_used, 4);
        let back = AitchisonModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let fitted = m.fitted_values(&x).unwrap();
        assert_eq!(fitted.n(), 5);
    }
}

//! JSON model documents. Reals are written in shortest round-trip form and
//! parsed with correct rounding, so a save/load cycle is bit-exact.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::fit::{Stage, ZadrModel};
use super::likelihood::{num_params, Precision};
use super::link::{LinkSpec, ModelKind};
use crate::dirichlet::SubcompositionMode;
use crate::error::{Result, ZadrError};
use crate::numerics::TerminationReason;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Non-finite reals are stored as `null` and read back as NaN.
pub(crate) mod nullable_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub model_kind: ModelKind,
    pub stage: Stage,
    pub ref_index: usize,
    pub component_names: Vec<String>,
    pub covariate_names: Vec<String>,
    /// Row-major, `(D-1) x (p+1)`.
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub precision: Precision,
    pub p_hat: Vec<f64>,
    /// Row-major, square over the packed parameters.
    pub covariance: Vec<f64>,
    #[serde(default)]
    pub covariance_pseudo: bool,
    #[serde(with = "nullable_f64")]
    pub loglik: f64,
    pub converged: bool,
    pub termination: TerminationReason,
    pub iterations: usize,
    pub seed: u64,
    pub zero_mode: SubcompositionMode,
    pub library_version: String,
}

impl From<&ZadrModel> for ModelDocument {
    fn from(m: &ZadrModel) -> Self {
        let b = (0..m.b.nrows()).flat_map(|r| m.b.row(r).iter().copied().collect::<Vec<_>>()).collect();
        let covariance = (0..m.covariance.nrows())
            .flat_map(|r| m.covariance.row(r).iter().copied().collect::<Vec<_>>())
            .collect();
        ModelDocument {
            model_kind: m.link.model_kind,
            stage: m.stage,
            ref_index: m.link.ref_index,
            component_names: m.component_names.clone(),
            covariate_names: m.covariate_names.clone(),
            b,
            precision: m.precision.clone(),
            p_hat: m.p_hat.clone(),
            covariance,
            covariance_pseudo: m.covariance_pseudo,
            loglik: m.loglik,
            converged: m.converged,
            termination: m.termination,
            iterations: m.iterations,
            seed: m.seed,
            zero_mode: m.zero_mode,
            library_version: LIBRARY_VERSION.to_string(),
        }
    }
}

impl TryFrom<ModelDocument> for ZadrModel {
    type Error = ZadrError;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        let dd = doc.component_names.len();
        let k = doc.covariate_names.len();
        if dd < 2 || k < 1 {
            return Err(ZadrError::SchemaMismatch("model needs >= 2 components and >= 1 covariate".into()));
        }
        if doc.ref_index >= dd {
            return Err(ZadrError::SchemaMismatch(format!("ref_index {} out of range", doc.ref_index)));
        }
        let d = dd - 1;
        if doc.b.len() != d * k {
            return Err(ZadrError::SchemaMismatch(format!("B has {} entries, expected {}", doc.b.len(), d * k)));
        }
        if doc.precision.kind() != doc.model_kind {
            return Err(ZadrError::SchemaMismatch("precision block does not match model_kind".into()));
        }
        if let Precision::Gamma(g) = &doc.precision {
            if g.len() != k {
                return Err(ZadrError::SchemaMismatch(format!("gamma has {} entries, expected {k}", g.len())));
            }
        }
        if doc.p_hat.len() != dd {
            return Err(ZadrError::SchemaMismatch("p_hat length differs from component count".into()));
        }
        let np = num_params(doc.model_kind, d, k);
        if doc.covariance.len() != np * np {
            return Err(ZadrError::SchemaMismatch(format!(
                "covariance has {} entries, expected {}",
                doc.covariance.len(),
                np * np
            )));
        }
        Ok(ZadrModel {
            b: DMatrix::from_row_slice(d, k, &doc.b),
            precision: doc.precision,
            p_hat: doc.p_hat,
            covariance: DMatrix::from_row_slice(np, np, &doc.covariance),
            covariance_pseudo: doc.covariance_pseudo,
            loglik: doc.loglik,
            converged: doc.converged,
            termination: doc.termination,
            iterations: doc.iterations,
            stage: doc.stage,
            link: LinkSpec::new(doc.ref_index, doc.model_kind),
            zero_mode: doc.zero_mode,
            seed: doc.seed,
            component_names: doc.component_names,
            covariate_names: doc.covariate_names,
        })
    }
}

impl ZadrModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        ZadrModel::try_from(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| ZadrError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }
}

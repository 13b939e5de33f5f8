use serde::{Deserialize, Serialize};

use crate::error::{Result, ZadrError};
use crate::numerics::chi_square_sf;
use crate::zadr::{ModelKind, ZadrModel};

/// Negative statistics down to this are treated as optimizer noise.
pub const NEGATIVE_STAT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrtResult {
    pub stat: f64,
    pub df: usize,
    pub pvalue: f64,
}

/// Likelihood-ratio test of constant precision against covariate-linked
/// precision, from log-likelihoods of the same kind of fit.
pub fn lrt_from_logliks(loglik_simple: f64, loglik_mixed: f64, df: usize) -> Result<LrtResult> {
    if df == 0 {
        return Err(ZadrError::InvalidArgument("models are not nested by any parameter".into()));
    }
    if !loglik_simple.is_finite() || !loglik_mixed.is_finite() {
        return Err(ZadrError::DomainError("log-likelihoods must be finite".into()));
    }
    let raw = 2.0 * (loglik_mixed - loglik_simple);
    if raw < -NEGATIVE_STAT_TOLERANCE {
        return Err(ZadrError::NegativeStat(raw));
    }
    let stat = raw.max(0.0);
    Ok(LrtResult { stat, df, pvalue: chi_square_sf(stat, df)? })
}

pub fn lrt(simple: &ZadrModel, mixed: &ZadrModel) -> Result<LrtResult> {
    if simple.kind() != ModelKind::Simple || mixed.kind() != ModelKind::Mixed {
        return Err(ZadrError::KindMismatch);
    }
    if simple.b.shape() != mixed.b.shape()
        || simple.link.ref_index != mixed.link.ref_index
        || simple.stage != mixed.stage
        || simple.component_names != mixed.component_names
        || simple.covariate_names != mixed.covariate_names
    {
        return Err(ZadrError::KindMismatch);
    }
    let df = mixed.precision.len() - simple.precision.len();
    lrt_from_logliks(simple.loglik, mixed.loglik, df)
}

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZadrError};
use crate::numerics::{softmax, LINEAR_PREDICTOR_CLAMP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// One precision `φ` shared by all rows.
    #[default]
    Simple,
    /// Row precision `exp(x'γ)`.
    Mixed,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Simple => "simple",
            ModelKind::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinkSpec {
    /// Zero-based index of the reference component.
    pub ref_index: usize,
    pub model_kind: ModelKind,
}

impl LinkSpec {
    pub fn new(ref_index: usize, model_kind: ModelKind) -> Self {
        Self { ref_index, model_kind }
    }

    pub(crate) fn check(&self, d: usize) -> Result<()> {
        if self.ref_index >= d {
            return Err(ZadrError::InvalidArgument(format!(
                "reference component {} out of range for {d} components",
                self.ref_index
            )));
        }
        Ok(())
    }
}

/// Maps the component index `c != ref` to its row in the coefficient matrix.
#[inline]
pub(crate) fn coef_row(c: usize, ref_index: usize) -> usize {
    if c < ref_index { c } else { c - 1 }
}

/// Linear predictors for one row; the reference slot is fixed at zero.
pub(crate) fn linear_predictors(x_row: &[f64], b: &nalgebra::DMatrix<f64>, ref_index: usize, out: &mut [f64]) {
    let d = b.nrows() + 1;
    for c in 0..d {
        out[c] = if c == ref_index {
            0.0
        } else {
            let k = coef_row(c, ref_index);
            x_row.iter().enumerate().map(|(j, xv)| xv * b[(k, j)]).sum()
        };
    }
}

/// Mean composition `a*` for covariate row `x_row` under coefficients `b`
/// (`d x (p+1)`, one row per non-reference component).
pub fn link_alpha(x_row: &[f64], b: &nalgebra::DMatrix<f64>, ref_index: usize) -> Result<Vec<f64>> {
    if x_row.len() != b.ncols() {
        return Err(ZadrError::DimensionMismatch(format!(
            "covariate row has {} entries, coefficients have {} columns",
            x_row.len(),
            b.ncols()
        )));
    }
    let d = b.nrows() + 1;
    if ref_index >= d {
        return Err(ZadrError::InvalidArgument(format!("reference component {ref_index} out of range")));
    }
    let mut eta = vec![0.0; d];
    linear_predictors(x_row, b, ref_index, &mut eta);
    Ok(softmax(&eta))
}

pub(crate) fn clamped_predictor(x_row: &[f64], gamma: &[f64]) -> (f64, bool) {
    let lp: f64 = x_row.iter().zip(gamma).map(|(x, g)| x * g).sum();
    if lp > LINEAR_PREDICTOR_CLAMP {
        (LINEAR_PREDICTOR_CLAMP, true)
    } else if lp < -LINEAR_PREDICTOR_CLAMP {
        (-LINEAR_PREDICTOR_CLAMP, true)
    } else {
        (lp, false)
    }
}

/// Row precision `exp(x'γ)`, with the linear predictor clamped to ±700.
pub fn link_phi(x_row: &[f64], gamma: &[f64]) -> Result<f64> {
    if x_row.len() != gamma.len() {
        return Err(ZadrError::DimensionMismatch(format!(
            "covariate row has {} entries, gamma has {}",
            x_row.len(),
            gamma.len()
        )));
    }
    Ok(clamped_predictor(x_row, gamma).0.exp())
}

/// Log-probability of a zero pattern under independent Bernoulli indicators
/// with success probabilities `p`. Impossible patterns give `-inf`.
pub fn binary_log_prob(u_row: &[bool], p: &[f64]) -> Result<f64> {
    if u_row.len() != p.len() {
        return Err(ZadrError::DimensionMismatch("pattern and probability lengths differ".into()));
    }
    let mut out = 0.0;
    for (&u, &pj) in u_row.iter().zip(p) {
        if !(0.0..=1.0).contains(&pj) {
            return Err(ZadrError::DomainError(format!("probability {pj} outside [0, 1]")));
        }
        let q = if u { pj } else { 1.0 - pj };
        if q == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if q < 1.0 {
            out += q.ln();
        }
    }
    Ok(out)
}

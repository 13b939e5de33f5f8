use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::compositions::CompositionDataset;
use crate::error::{Result, ZadrError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    /// `ΣΣ y log(y / ŷ)`, with `0 log 0 = 0`.
    pub kl: f64,
    /// `Σ ‖y_i − ŷ_i‖²`.
    pub l2: f64,
}

pub fn fit_metrics(observed: &CompositionDataset, fitted: &CompositionDataset) -> Result<FitMetrics> {
    fit_metrics_matrix(observed.values(), fitted.values())
}

/// As [`fit_metrics`] on raw matrices.
pub fn fit_metrics_matrix(y: &DMatrix<f64>, yh: &DMatrix<f64>) -> Result<FitMetrics> {
    if y.shape() != yh.shape() {
        return Err(ZadrError::DimensionMismatch(format!(
            "observed is {:?}, fitted is {:?}",
            y.shape(),
            yh.shape()
        )));
    }
    let mut kl = 0.0;
    let mut l2 = 0.0;
    for (o, f) in y.iter().zip(yh.iter()) {
        if *o > 0.0 {
            kl += o * (o / f).ln();
        }
        l2 += (o - f).powi(2);
    }
    Ok(FitMetrics { kl, l2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compositions::{default_component_names, load_dataset};

    fn ds(rows: &[Vec<f64>]) -> CompositionDataset {
        load_dataset(rows, &default_component_names(rows[0].len()), 1e-8).unwrap()
    }

    #[test]
    fn identical_inputs() {
        let a = ds(&[vec![0.2, 0.8], vec![0.6, 0.4]]);
        assert_eq!(fit_metrics(&a, &a).unwrap(), FitMetrics { kl: 0.0, l2: 0.0 });
    }

    #[test]
    fn hand_values() {
        // a two-part row with one zero cannot be loaded, so use three parts
        let obs = ds(&[vec![0.5, 0.5, 0.0]]);
        let fit = ds(&[vec![0.25, 0.25, 0.5]]);
        let m = fit_metrics(&obs, &fit).unwrap();
        assert!((m.kl - 2f64.ln()).abs() < 1e-15);
        assert!((m.l2 - 0.375).abs() < 1e-15);
    }

    #[test]
    fn degenerate_row_on_raw_matrices() {
        let y = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let yh = DMatrix::from_row_slice(1, 2, &[0.5, 0.5]);
        let m = fit_metrics_matrix(&y, &yh).unwrap();
        assert!((m.kl - 2f64.ln()).abs() < 1e-15);
        assert!((m.l2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let a = ds(&[vec![0.2, 0.8]]);
        let b = ds(&[vec![0.2, 0.8], vec![0.5, 0.5]]);
        assert!(fit_metrics(&a, &b).is_err());
    }
}

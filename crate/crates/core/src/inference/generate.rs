use nalgebra::DMatrix;
use rand::Rng;

use crate::compositions::{CompositionDataset, CovariateMatrix};
use crate::dirichlet::sample_on_support;
use crate::error::Result;
use crate::zadr::ZadrModel;

/// Draws one response row per design row. Row `i` is drawn from the
/// marginal Dirichlet on `supports[i]` and is exactly zero elsewhere.
pub fn simulate_responses<R: Rng + ?Sized>(
    model: &ZadrModel,
    x: &CovariateMatrix,
    supports: &[Vec<usize>],
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let d = model.num_components();
    let mut out = DMatrix::zeros(x.n(), d);
    for i in 0..x.n() {
        let (a, phi) = model.row_parameters(&x.row(i))?;
        let alphas: Vec<f64> = a.iter().map(|v| v * phi).collect();
        let row = sample_on_support(rng, &alphas, &supports[i]);
        for j in 0..d {
            out[(i, j)] = row[j];
        }
    }
    Ok(out)
}

/// Wraps simulated responses as a dataset, rejecting draws whose pattern
/// differs from `supports` (a positive value can underflow to zero).
pub fn as_dataset(values: DMatrix<f64>, model: &ZadrModel, supports: &[Vec<usize>]) -> Option<CompositionDataset> {
    for (i, set) in supports.iter().enumerate() {
        if set.iter().any(|&j| !(values[(i, j)] > 0.0)) {
            return None;
        }
    }
    let n = values.nrows();
    CompositionDataset::new(
        values,
        model.component_names.clone(),
        crate::compositions::default_row_ids(n),
        1e-8,
    )
    .ok()
}

//! Compositional datasets, covariate designs, zero patterns and the additive
//! log-ratio transform.
//!
//! Component indices are zero-based throughout the crate.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZadrError};

/// Default tolerance on `|row sum - 1|` accepted at load time.
pub const DEFAULT_SUM_TOLERANCE: f64 = 1e-8;

/// An `n x D` matrix of proportions; each row lies on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionDataset {
    values: DMatrix<f64>,
    component_names: Vec<String>,
    row_ids: Vec<String>,
}

impl CompositionDataset {
    /// Validates `values` and renormalizes rows whose sum is within
    /// `tolerance` of one. Zeros are left untouched.
    pub fn new(
        values: DMatrix<f64>,
        component_names: Vec<String>,
        row_ids: Vec<String>,
        tolerance: f64,
    ) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(ZadrError::InvalidArgument(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        let (n, d) = values.shape();
        if n == 0 || d == 0 {
            return Err(ZadrError::EmptyInput);
        }
        if d < 2 {
            return Err(ZadrError::InvalidArgument(
                "a composition needs at least two components".into(),
            ));
        }
        if component_names.len() != d {
            return Err(ZadrError::DimensionMismatch(format!(
                "{} component names for {d} columns",
                component_names.len()
            )));
        }
        if row_ids.len() != n {
            return Err(ZadrError::DimensionMismatch(format!(
                "{} row ids for {n} rows",
                row_ids.len()
            )));
        }

        let mut values = values;
        for i in 0..n {
            let mut sum = 0.0;
            let mut positive = 0;
            for j in 0..d {
                let v = values[(i, j)];
                if !v.is_finite() {
                    return Err(ZadrError::NonFinite { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(ZadrError::NegativeEntry { row: i, col: j, value: v });
                }
                if v > 0.0 {
                    positive += 1;
                }
                sum += v;
            }
            if (sum - 1.0).abs() > tolerance {
                return Err(ZadrError::RowSumViolation { row: i, sum, tolerance });
            }
            if positive < 2 {
                return Err(ZadrError::DegenerateRow { row: i });
            }
            if sum != 1.0 {
                for j in 0..d {
                    if values[(i, j)] > 0.0 {
                        values[(i, j)] /= sum;
                    }
                }
            }
        }

        Ok(Self { values, component_names, row_ids })
    }

    /// Builds a dataset with generated names (`y1..yD`, `1..n`).
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let (n, d) = values.shape();
        Self::new(
            values,
            default_component_names(d),
            default_row_ids(n),
            DEFAULT_SUM_TOLERANCE,
        )
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_components(&self) -> usize {
        self.values.ncols()
    }

    pub fn component_names(&self) -> &[String] {
        &self.component_names
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn with_component_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_components() {
            return Err(ZadrError::DimensionMismatch(format!(
                "{} component names for {} columns",
                names.len(),
                self.num_components()
            )));
        }
        self.component_names = names;
        Ok(self)
    }

    /// Keeps the listed rows, in the order given.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select_rows(rows.iter()),
            component_names: self.component_names.clone(),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
        }
    }

    pub fn is_zero_free(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }
}

/// Loads a dataset from row vectors.
pub fn load_dataset(
    rows: &[Vec<f64>],
    component_names: &[String],
    tolerance: f64,
) -> Result<CompositionDataset> {
    if rows.is_empty() {
        return Err(ZadrError::EmptyInput);
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(ZadrError::EmptyInput);
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(ZadrError::DimensionMismatch(format!(
            "row {i} has {} entries, expected {d}",
            r.len()
        )));
    }
    let values = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    CompositionDataset::new(
        values,
        component_names.to_vec(),
        default_row_ids(rows.len()),
        tolerance,
    )
}

pub fn default_component_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("y{j}")).collect()
}

pub fn default_row_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

pub const INTERCEPT_NAME: &str = "(Intercept)";

/// `n x (p+1)` design with a leading column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateMatrix {
    design: DMatrix<f64>,
    covariate_names: Vec<String>,
}

impl CovariateMatrix {
    /// Takes a full design whose first column must be the intercept.
    pub fn new(design: DMatrix<f64>, covariate_names: Vec<String>) -> Result<Self> {
        let (n, k) = design.shape();
        if n == 0 || k == 0 {
            return Err(ZadrError::EmptyInput);
        }
        if covariate_names.len() != k {
            return Err(ZadrError::DimensionMismatch(format!(
                "{} covariate names for {k} design columns",
                covariate_names.len()
            )));
        }
        for i in 0..n {
            for j in 0..k {
                if !design[(i, j)].is_finite() {
                    return Err(ZadrError::NonFinite { row: i, col: j });
                }
            }
            if design[(i, 0)] != 1.0 {
                return Err(ZadrError::InvalidArgument(format!(
                    "design row {i}: first column must be the intercept (1.0)"
                )));
            }
        }
        Ok(Self { design, covariate_names })
    }

    /// Prepends the intercept column to `n x p` raw covariates.
    pub fn with_intercept(raw: &DMatrix<f64>, names: &[String]) -> Result<Self> {
        let (n, p) = raw.shape();
        if n == 0 {
            return Err(ZadrError::EmptyInput);
        }
        if names.len() != p {
            return Err(ZadrError::DimensionMismatch(format!(
                "{} covariate names for {p} columns",
                names.len()
            )));
        }
        let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { raw[(i, j - 1)] });
        let mut all = Vec::with_capacity(p + 1);
        all.push(INTERCEPT_NAME.to_string());
        all.extend(names.iter().cloned());
        Self::new(design, all)
    }

    /// Intercept-only design with `n` rows.
    pub fn intercept_only(n: usize) -> Result<Self> {
        Self::new(DMatrix::from_element(n, 1, 1.0), vec![INTERCEPT_NAME.to_string()])
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    /// Number of non-intercept covariates.
    pub fn p(&self) -> usize {
        self.design.ncols() - 1
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.design.row(i).iter().copied().collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            design: self.design.select_rows(rows.iter()),
            covariate_names: self.covariate_names.clone(),
        }
    }
}

/// Which components are observed (strictly positive) in every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroPattern {
    /// `u[i][j]` is true when component `j` of row `i` is nonzero.
    pub u: Vec<Vec<bool>>,
    pub nonzero_sets: Vec<Vec<usize>>,
    pub zero_row_indices: Vec<usize>,
}

impl ZeroPattern {
    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn num_components(&self) -> usize {
        self.u.first().map_or(0, Vec::len)
    }

    pub fn zero_free_rows(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.u[i].iter().all(|&b| b)).collect()
    }

    pub fn has_zeros(&self) -> bool {
        !self.zero_row_indices.is_empty()
    }
}

pub fn zero_pattern(ds: &CompositionDataset) -> ZeroPattern {
    let (n, d) = ds.values.shape();
    let mut u = Vec::with_capacity(n);
    let mut nonzero_sets = Vec::with_capacity(n);
    let mut zero_row_indices = Vec::new();
    for i in 0..n {
        let row: Vec<bool> = (0..d).map(|j| ds.values[(i, j)] > 0.0).collect();
        nonzero_sets.push((0..d).filter(|&j| row[j]).collect());
        if row.iter().any(|&b| !b) {
            zero_row_indices.push(i);
        }
        u.push(row);
    }
    ZeroPattern { u, nonzero_sets, zero_row_indices }
}

/// Nonzero proportion per component.
pub fn estimate_p(zp: &ZeroPattern) -> Vec<f64> {
    let n = zp.n();
    let d = zp.num_components();
    if n == 0 {
        return vec![1.0; d];
    }
    (0..d)
        .map(|j| zp.u.iter().filter(|row| row[j]).count() as f64 / n as f64)
        .collect()
}

fn check_ref(ref_index: usize, d: usize) -> Result<()> {
    if ref_index >= d {
        return Err(ZadrError::InvalidArgument(format!(
            "reference component {ref_index} out of range for {d} components"
        )));
    }
    Ok(())
}

/// Additive log-ratio transform `log(y_i / y_ref)` for every `i != ref`,
/// keeping the order of the non-reference components.
pub fn alr(ds: &CompositionDataset, ref_index: usize) -> Result<DMatrix<f64>> {
    alr_matrix(&ds.values, ref_index)
}

pub(crate) fn alr_matrix(values: &DMatrix<f64>, ref_index: usize) -> Result<DMatrix<f64>> {
    let (n, d) = values.shape();
    check_ref(ref_index, d)?;
    if let Some(i) = (0..n).find(|&i| values.row(i).iter().any(|&v| v <= 0.0)) {
        return Err(ZadrError::ZeroInTransform { row: i });
    }
    let mut z = DMatrix::zeros(n, d - 1);
    for i in 0..n {
        let log_ref = values[(i, ref_index)].ln();
        for (k, j) in (0..d).filter(|&j| j != ref_index).enumerate() {
            z[(i, k)] = values[(i, j)].ln() - log_ref;
        }
    }
    Ok(z)
}

/// Inverse of [`alr`]: rows of `z` map back onto the simplex.
pub fn alr_inv(z: &DMatrix<f64>, ref_index: usize) -> Result<CompositionDataset> {
    let values = alr_inv_matrix(z, ref_index)?;
    CompositionDataset::from_matrix(values)
}

pub(crate) fn alr_inv_matrix(z: &DMatrix<f64>, ref_index: usize) -> Result<DMatrix<f64>> {
    let (n, dm1) = z.shape();
    let d = dm1 + 1;
    check_ref(ref_index, d)?;
    let mut out = DMatrix::zeros(n, d);
    let mut eta = vec![0.0; d];
    for i in 0..n {
        for (k, j) in (0..d).filter(|&j| j != ref_index).enumerate() {
            let v = z[(i, k)];
            if !v.is_finite() {
                return Err(ZadrError::NonFinite { row: i, col: k });
            }
            eta[j] = v;
        }
        eta[ref_index] = 0.0;
        let probs = crate::numerics::softmax(&eta);
        for j in 0..d {
            out[(i, j)] = probs[j];
        }
    }
    Ok(out)
}

//! Python bindings. Matrices are passed as lists of rows; covariates are raw
//! columns without the intercept, which is always added.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use zadr_core::compositions::DEFAULT_SUM_TOLERANCE;
use zadr_core::numerics::{digamma_fn, lgamma_fn, trigamma_fn};
use zadr_core::{
    CompositionDataset, CovariateMatrix, FitOptions, LinkSpec, ModelKind, Precision, SubcompositionMode,
    ZadrError,
};

fn err(e: ZadrError) -> PyErr {
    match e {
        ZadrError::Io(m) => PyOSError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err(format!("{what}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn dataset(y: &[Vec<f64>], names: Option<Vec<String>>) -> PyResult<CompositionDataset> {
    let values = matrix(y, "y")?;
    let ds = CompositionDataset::from_matrix(values).map_err(err)?;
    match names {
        Some(n) => ds.with_component_names(n).map_err(err),
        None => Ok(ds),
    }
}

fn design(x: Option<&[Vec<f64>]>, n: usize, names: Option<Vec<String>>) -> PyResult<CovariateMatrix> {
    match x {
        None => CovariateMatrix::intercept_only(n).map_err(err),
        Some(rows) => {
            let raw = matrix(rows, "x")?;
            let names = names.unwrap_or_else(|| (1..=raw.ncols()).map(|j| format!("x{j}")).collect());
            CovariateMatrix::with_intercept(&raw, &names).map_err(err)
        }
    }
}

fn zero_mode(s: &str) -> PyResult<SubcompositionMode> {
    match s {
        "renormalized" => Ok(SubcompositionMode::Renormalized),
        "as-written" | "as_written" => Ok(SubcompositionMode::AsWritten),
        _ => Err(PyValueError::new_err(format!("unknown zero mode '{s}'"))),
    }
}

/// A fitted or user-specified zero-adjusted Dirichlet regression model.
#[pyclass(name = "Model", module = "zadr", skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: zadr_core::ZadrModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (coefficients, precision, component_names, covariate_names, reference=0))]
    fn from_parameters(
        coefficients: Vec<Vec<f64>>,
        precision: Vec<f64>,
        component_names: Vec<String>,
        covariate_names: Vec<String>,
        reference: usize,
    ) -> PyResult<Self> {
        let b = matrix(&coefficients, "coefficients")?;
        let precision = if precision.len() == 1 { Precision::Phi(precision[0]) } else { Precision::Gamma(precision) };
        let mut cov = vec![zadr_core::compositions::INTERCEPT_NAME.to_string()];
        cov.extend(covariate_names);
        let inner =
            zadr_core::ZadrModel::from_parameters(b, precision, reference, component_names, cov).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: zadr_core::ZadrModel::from_json(text).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: zadr_core::ZadrModel::load(path).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().as_str()
    }

    #[getter]
    fn coefficients(&self) -> Vec<Vec<f64>> {
        rows_of(&self.inner.b)
    }

    /// `[φ]` for the simple model, `γ` for the mixed one.
    #[getter]
    fn precision(&self) -> Vec<f64> {
        self.inner.precision.as_vec()
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.params()
    }

    #[getter]
    fn standard_errors(&self) -> Vec<f64> {
        self.inner.standard_errors()
    }

    #[getter]
    fn parameter_names(&self) -> Vec<String> {
        self.inner.parameter_names()
    }

    #[getter]
    fn covariance(&self) -> Vec<Vec<f64>> {
        rows_of(&self.inner.covariance)
    }

    #[getter]
    fn loglik(&self) -> f64 {
        self.inner.loglik
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn p_hat(&self) -> Vec<f64> {
        self.inner.p_hat.clone()
    }

    #[getter]
    fn reference(&self) -> usize {
        self.inner.link.ref_index
    }

    #[getter]
    fn component_names(&self) -> Vec<String> {
        self.inner.component_names.clone()
    }

    #[getter]
    fn covariate_names(&self) -> Vec<String> {
        self.inner.covariate_names.clone()
    }

    /// Fitted compositions for raw covariate rows.
    #[pyo3(signature = (x=None, n=None))]
    fn predict(&self, x: Option<Vec<Vec<f64>>>, n: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
        let rows = x.as_ref().map_or(n.unwrap_or(1), Vec::len);
        let names = self.inner.covariate_names[1..].to_vec();
        let xm = design(x.as_deref(), rows, Some(names))?;
        let fitted = zadr_core::fitted_values(&self.inner, &xm).map_err(err)?;
        Ok(rows_of(fitted.values()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(kind={}, components={}, loglik={:.3}, converged={})",
            self.kind(),
            self.inner.num_components(),
            self.inner.loglik,
            self.inner.converged
        )
    }
}

/// Fits the zero-free initial model and the final zero-adjusted model.
/// Returns `(initial, final)`.
#[pyfunction]
#[pyo3(signature = (y, x=None, kind="simple", reference=0, zero_mode="renormalized", seed=1, component_names=None, covariate_names=None))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    y: Vec<Vec<f64>>,
    x: Option<Vec<Vec<f64>>>,
    kind: &str,
    reference: usize,
    zero_mode: &str,
    seed: u64,
    component_names: Option<Vec<String>>,
    covariate_names: Option<Vec<String>>,
) -> PyResult<(PyModel, PyModel)> {
    let kind = match kind {
        "simple" => ModelKind::Simple,
        "mixed" => ModelKind::Mixed,
        _ => return Err(PyValueError::new_err(format!("unknown model kind '{kind}'"))),
    };
    let ds = dataset(&y, component_names)?;
    let xm = design(x.as_deref(), ds.n(), covariate_names)?;
    let opts = FitOptions { zero_mode: self::zero_mode(zero_mode)?, random_seed: seed, ..FitOptions::default() };
    let link = LinkSpec::new(reference, kind);
    let out = py.detach(|| zadr_core::fit(&ds, &xm, &link, &opts)).map_err(err)?;
    Ok((PyModel { inner: out.initial }, PyModel { inner: out.final_model }))
}

/// Log-probability of one zero/nonzero pattern (`True` = nonzero).
#[pyfunction]
fn binary_log_prob(nonzero: Vec<bool>, p: Vec<f64>) -> PyResult<f64> {
    zadr_core::zadr::binary_log_prob(&nonzero, &p).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (y, reference=0))]
fn alr(y: Vec<Vec<f64>>, reference: usize) -> PyResult<Vec<Vec<f64>>> {
    let ds = CompositionDataset::new(
        matrix(&y, "y")?,
        zadr_core::compositions::default_component_names(y.first().map_or(0, Vec::len)),
        zadr_core::compositions::default_row_ids(y.len()),
        DEFAULT_SUM_TOLERANCE,
    )
    .map_err(err)?;
    Ok(rows_of(&zadr_core::alr(&ds, reference).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (z, reference=0))]
fn alr_inv(z: Vec<Vec<f64>>, reference: usize) -> PyResult<Vec<Vec<f64>>> {
    let ds = zadr_core::alr_inv(&matrix(&z, "z")?, reference).map_err(err)?;
    Ok(rows_of(ds.values()))
}

#[pyfunction]
fn lgamma(x: f64) -> PyResult<f64> {
    lgamma_fn(x).map_err(err)
}

#[pyfunction]
fn digamma(x: f64) -> PyResult<f64> {
    digamma_fn(x).map_err(err)
}

#[pyfunction]
fn trigamma(x: f64) -> PyResult<f64> {
    trigamma_fn(x).map_err(err)
}

/// Zero-effect statistic comparing the initial and final fits.
#[pyfunction]
#[pyo3(name = "diagnostic")]
fn zero_effect_diagnostic<'py>(py: Python<'py>, initial: &PyModel, final_model: &PyModel) -> PyResult<Bound<'py, PyDict>> {
    let d = zadr_core::diagnostic_t(&initial.inner, &final_model.inner).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("T", d.t)?;
    out.set_item("delta", d.delta)?;
    out.set_item("pseudo_inverse", d.sigma_pseudo)?;
    Ok(out)
}

/// Parametric bootstrap from `final_model`, preserving the zero pattern of `y`.
/// With `t_observed` the result includes a p-value.
#[pyfunction]
#[pyo3(signature = (final_model, y, x=None, replicates=999, seed=1, t_observed=None))]
fn bootstrap<'py>(
    py: Python<'py>,
    final_model: &PyModel,
    y: Vec<Vec<f64>>,
    x: Option<Vec<Vec<f64>>>,
    replicates: usize,
    seed: u64,
    t_observed: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = &final_model.inner;
    let ds = dataset(&y, Some(m.component_names.clone()))?;
    let xm = design(x.as_deref(), ds.n(), Some(m.covariate_names[1..].to_vec()))?;
    let cfg = zadr_core::BootstrapConfig {
        replicates,
        seed,
        fit_options: FitOptions { zero_mode: m.zero_mode, random_seed: m.seed, ..FitOptions::default() },
    };
    let r = py.detach(|| zadr_core::inference::bootstrap(m, &ds, &xm, t_observed, &cfg)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("pvalue", r.pvalue)?;
    out.set_item("B", r.replicates)?;
    out.set_item("failures", r.failures)?;
    out.set_item("bias", r.bias)?;
    out.set_item("sd", r.replicate_sd)?;
    out.set_item("stats", r.replicate_stats)?;
    Ok(out)
}

/// Likelihood-ratio test of a simple fit against a mixed fit.
#[pyfunction]
fn lrt<'py>(py: Python<'py>, simple: &PyModel, mixed: &PyModel) -> PyResult<Bound<'py, PyDict>> {
    let r = zadr_core::lrt(&simple.inner, &mixed.inner).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("stat", r.stat)?;
    out.set_item("df", r.df)?;
    out.set_item("pvalue", r.pvalue)?;
    Ok(out)
}

/// Kullback-Leibler and squared-error discrepancies between two row sets.
#[pyfunction]
fn fit_metrics<'py>(py: Python<'py>, observed: Vec<Vec<f64>>, fitted: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let m = zadr_core::inference::fit_metrics_matrix(&matrix(&observed, "observed")?, &matrix(&fitted, "fitted")?)
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("kl", m.kl)?;
    out.set_item("l2", m.l2)?;
    Ok(out)
}

#[pymodule]
fn zadr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(binary_log_prob, m)?)?;
    m.add_function(wrap_pyfunction!(alr, m)?)?;
    m.add_function(wrap_pyfunction!(alr_inv, m)?)?;
    m.add_function(wrap_pyfunction!(lgamma, m)?)?;
    m.add_function(wrap_pyfunction!(digamma, m)?)?;
    m.add_function(wrap_pyfunction!(trigamma, m)?)?;
    m.add_function(wrap_pyfunction!(zero_effect_diagnostic, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap, m)?)?;
    m.add_function(wrap_pyfunction!(lrt, m)?)?;
    m.add_function(wrap_pyfunction!(fit_metrics, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! Staged maximum-likelihood fitting.
//!
//! 1. alr-transform the zero-free rows and regress them on the design by
//!    least squares;
//! 2. maximize the plain Dirichlet likelihood of the zero-free rows from that
//!    start, giving the *initial* model;
//! 3. maximize the zero-adjusted likelihood of all rows from the initial
//!    coefficients, giving the *final* model.
//!
//! The zero probabilities `p̂` have a closed-form estimate and enter only an
//! additive term, so they are fixed before the optimization.

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::likelihood::{binary_loglik, pack_params, unpack_params, LikelihoodData, Precision};
use super::link::{link_alpha, LinkSpec, ModelKind};
use crate::compositions::{alr_matrix, estimate_p, zero_pattern, CompositionDataset, CovariateMatrix, ZeroPattern};
use crate::dirichlet::SubcompositionMode;
use crate::error::{Result, ZadrError};
use crate::numerics::linalg::{least_squares, symmetric_inverse};
use crate::numerics::{hessian_from_gradient, minimize, OptimResult, OptimizerOptions, TerminationReason};
use crate::random::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecisionInit {
    /// Intercept at `log φ₀`, slopes drawn from `N(0, scale²)`.
    RandomNormal { scale: f64 },
    /// Intercept at `log φ₀`, slopes zero.
    Zeros,
}

impl Default for PrecisionInit {
    fn default() -> Self {
        PrecisionInit::RandomNormal { scale: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitOptions {
    pub optimizer: OptimizerOptions,
    pub zero_mode: SubcompositionMode,
    pub mixed_precision_init: PrecisionInit,
    pub random_seed: u64,
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if let PrecisionInit::RandomNormal { scale } = self.mixed_precision_init {
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(ZadrError::InvalidArgument(format!("precision init scale must be positive, got {scale}")));
            }
        }
        Ok(())
    }
}

/// A fitted precision above this means the optimizer ran off to infinity.
pub const DIVERGED_PRECISION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// Fitted to the zero-free rows only.
    ZeroFreeInitial,
    /// Fitted to all rows with the zero-adjusted likelihood.
    Final,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZadrModel {
    /// `d x (p+1)` coefficients, one row per non-reference component.
    pub b: DMatrix<f64>,
    pub precision: Precision,
    pub p_hat: Vec<f64>,
    /// Over the packed parameters `(vec B, φ | γ)`.
    pub covariance: DMatrix<f64>,
    /// True when the information matrix was too ill-conditioned to invert
    /// and a pseudo-inverse was used.
    pub covariance_pseudo: bool,
    pub loglik: f64,
    pub converged: bool,
    pub termination: TerminationReason,
    pub iterations: usize,
    pub stage: Stage,
    pub link: LinkSpec,
    pub zero_mode: SubcompositionMode,
    pub seed: u64,
    pub component_names: Vec<String>,
    pub covariate_names: Vec<String>,
}

impl ZadrModel {
    /// A model with given parameters and no fitting history, e.g. a
    /// simulation truth. `p_hat` is all ones and the covariance is zero.
    pub fn from_parameters(
        b: DMatrix<f64>,
        precision: Precision,
        ref_index: usize,
        component_names: Vec<String>,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        let d = b.nrows();
        let k = b.ncols();
        if component_names.len() != d + 1 || covariate_names.len() != k {
            return Err(ZadrError::DimensionMismatch(format!(
                "B is {d}x{k} but {} component and {} covariate names were given",
                component_names.len(),
                covariate_names.len()
            )));
        }
        let link = LinkSpec::new(ref_index, precision.kind());
        link.check(d + 1)?;
        match &precision {
            Precision::Phi(phi) if !(*phi > 0.0 && phi.is_finite()) => {
                return Err(ZadrError::DomainError(format!("phi must be positive, got {phi}")))
            }
            Precision::Gamma(g) if g.len() != k => {
                return Err(ZadrError::DimensionMismatch(format!("gamma has {} entries, expected {k}", g.len())))
            }
            _ => {}
        }
        if b.iter().chain(precision.as_vec().iter()).any(|v| !v.is_finite()) {
            return Err(ZadrError::DomainError("parameters must be finite".into()));
        }
        let np = b.len() + precision.len();
        Ok(Self {
            b,
            precision,
            p_hat: vec![1.0; d + 1],
            covariance: DMatrix::zeros(np, np),
            covariance_pseudo: false,
            loglik: f64::NAN,
            converged: true,
            termination: TerminationReason::GradientTol,
            iterations: 0,
            stage: Stage::Final,
            link,
            zero_mode: SubcompositionMode::default(),
            seed: 0,
            component_names,
            covariate_names,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.link.model_kind
    }

    pub fn num_components(&self) -> usize {
        self.b.nrows() + 1
    }

    pub fn params(&self) -> Vec<f64> {
        pack_params(&self.b, &self.precision)
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.covariance.nrows()).map(|i| self.covariance[(i, i)].max(0.0).sqrt()).collect()
    }

    /// Labels of the packed parameters, e.g. `B[Obesa,logdepth]`, `phi`.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (c, comp) in self.component_names.iter().enumerate() {
            if c == self.link.ref_index {
                continue;
            }
            for cov in &self.covariate_names {
                out.push(format!("B[{comp},{cov}]"));
            }
        }
        match &self.precision {
            Precision::Phi(_) => out.push("phi".into()),
            Precision::Gamma(_) => {
                for cov in &self.covariate_names {
                    out.push(format!("gamma[{cov}]"));
                }
            }
        }
        out
    }

    /// Mean composition and precision for one covariate row.
    pub fn row_parameters(&self, x_row: &[f64]) -> Result<(Vec<f64>, f64)> {
        let a = link_alpha(x_row, &self.b, self.link.ref_index)?;
        let phi = match &self.precision {
            Precision::Phi(p) => *p,
            Precision::Gamma(g) => super::link::link_phi(x_row, g)?,
        };
        Ok((a, phi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub initial: ZadrModel,
    pub final_model: ZadrModel,
}

/// Least-squares coefficients of the alr-transformed responses, transposed to
/// the `d x (p+1)` layout used by the Dirichlet link.
pub fn ols_init(ds_zero_free: &CompositionDataset, x_zero_free: &CovariateMatrix, link: &LinkSpec) -> Result<DMatrix<f64>> {
    let k = x_zero_free.design().ncols();
    if ds_zero_free.n() != x_zero_free.n() {
        return Err(ZadrError::DimensionMismatch("dataset and design row counts differ".into()));
    }
    if ds_zero_free.n() < k + 1 {
        return Err(ZadrError::InsufficientRows { needed: k + 1, found: ds_zero_free.n() });
    }
    let z = alr_matrix(ds_zero_free.values(), link.ref_index)?;
    let (coef, _) = least_squares(x_zero_free.design(), &z)?;
    Ok(coef.transpose())
}

/// Method-of-moments precision from `Var(y_i) = a_i (1 - a_i) / (φ + 1)`.
fn moment_precision(ds: &CompositionDataset, x: &CovariateMatrix, b: &DMatrix<f64>, ref_index: usize) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..ds.n() {
        let a = link_alpha(&x.row(i), b, ref_index)?;
        for (j, aj) in a.iter().enumerate() {
            num += aj * (1.0 - aj);
            den += (ds.values()[(i, j)] - aj).powi(2);
        }
    }
    let phi = if den > 0.0 { num / den - 1.0 } else { 1e3 };
    Ok(if phi.is_finite() { phi.clamp(0.5, 1e6) } else { 1.0 })
}

/// Parameter transform used by the optimizer: `log φ` for the simple model.
fn to_internal(theta: &[f64], kind: ModelKind) -> Vec<f64> {
    let mut t = theta.to_vec();
    if kind == ModelKind::Simple {
        let last = t.len() - 1;
        t[last] = t[last].ln();
    }
    t
}

fn to_natural(t: &[f64], kind: ModelKind) -> Vec<f64> {
    let mut theta = t.to_vec();
    if kind == ModelKind::Simple {
        let last = theta.len() - 1;
        theta[last] = theta[last].exp();
    }
    theta
}

struct Maximized {
    theta: Vec<f64>,
    loglik: f64,
    result: OptimResult,
    covariance: DMatrix<f64>,
    pseudo: bool,
}

fn maximize(data: &LikelihoodData, kind: ModelKind, start: &[f64], opts: &OptimizerOptions) -> Result<Maximized> {
    let d = data.num_components() - 1;
    let k = data.num_design_cols();
    let eval = |t: &[f64], want_grad: bool| -> (f64, Option<Vec<f64>>) {
        let theta = to_natural(t, kind);
        match unpack_params(&theta, kind, d, k) {
            Ok((b, prec)) => {
                if let Precision::Phi(phi) = prec {
                    if !(phi > 0.0) || !phi.is_finite() {
                        return (f64::INFINITY, None);
                    }
                }
                let (v, g) = data.evaluate(&b, &prec, want_grad);
                let g = g.map(|mut g| {
                    if kind == ModelKind::Simple {
                        let last = g.len() - 1;
                        g[last] *= theta[last];
                    }
                    g.iter().map(|x| -x).collect()
                });
                (-v, g)
            }
            Err(_) => (f64::INFINITY, None),
        }
    };
    let objective = |t: &[f64]| eval(t, false).0;
    let gradient = |t: &[f64]| eval(t, true).1.unwrap_or_else(|| vec![f64::NAN; t.len()]);

    let t0 = to_internal(start, kind);
    let mut result = minimize(objective, Some(gradient), &t0, opts)?;
    if result.converged && result.termination_reason != TerminationReason::GradientTol {
        // fresh curvature model from the current point
        let again = minimize(objective, Some(gradient), &result.argmin, opts)?;
        if again.value <= result.value {
            let iterations = result.iterations + again.iterations;
            result = OptimResult { iterations, ..again };
        }
    }

    let theta = to_natural(&result.argmin, kind);
    let natural_grad = |th: &[f64]| -> Vec<f64> {
        match unpack_params(th, kind, d, k) {
            Ok((b, prec)) => data.evaluate(&b, &prec, true).1.expect("gradient requested"),
            Err(_) => vec![f64::NAN; th.len()],
        }
    };
    let hess = hessian_from_gradient(&natural_grad, &theta)?;
    let n = theta.len();
    let info = DMatrix::from_fn(n, n, |i, j| -hess[i][j]);
    let inv = symmetric_inverse(&info)?;
    if inv.pseudo {
        log::warn!(
            "information matrix is ill-conditioned (condition {:.3e}); covariance uses a pseudo-inverse",
            inv.condition
        );
    }
    Ok(Maximized {
        loglik: -result.value,
        theta,
        result,
        covariance: inv.inverse,
        pseudo: inv.pseudo,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_model(
    m: &Maximized,
    kind: ModelKind,
    d: usize,
    k: usize,
    loglik: f64,
    p_hat: Vec<f64>,
    stage: Stage,
    link: &LinkSpec,
    opts: &FitOptions,
    ds: &CompositionDataset,
    x: &CovariateMatrix,
) -> Result<ZadrModel> {
    let (b, precision) = unpack_params(&m.theta, kind, d, k)?;
    let max_phi = match &precision {
        Precision::Phi(phi) => *phi,
        Precision::Gamma(g) => (0..x.n())
            .map(|i| super::link::link_phi(&x.row(i), g).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max),
    };
    let diverged = !(max_phi <= DIVERGED_PRECISION) || !loglik.is_finite();
    if diverged {
        log::warn!("{stage:?} fit diverged (largest precision {max_phi:.3e}); marking it unconverged");
    }
    Ok(ZadrModel {
        b,
        precision,
        p_hat,
        covariance: m.covariance.clone(),
        covariance_pseudo: m.pseudo,
        loglik,
        converged: m.result.converged && !diverged,
        termination: m.result.termination_reason,
        iterations: m.result.iterations,
        stage,
        link: *link,
        zero_mode: opts.zero_mode,
        seed: opts.random_seed,
        component_names: ds.component_names().to_vec(),
        covariate_names: x.covariate_names().to_vec(),
    })
}

/// Runs the staged fit and returns both the zero-free initial model and the
/// final zero-adjusted model.
pub fn fit(ds: &CompositionDataset, x: &CovariateMatrix, link: &LinkSpec, opts: &FitOptions) -> Result<FitOutcome> {
    opts.validate()?;
    let d_full = ds.num_components();
    link.check(d_full)?;
    if ds.n() != x.n() {
        return Err(ZadrError::DimensionMismatch(format!("{} composition rows but {} covariate rows", ds.n(), x.n())));
    }
    let zp = zero_pattern(ds);
    fit_with_pattern(ds, x, &zp, link, opts)
}

pub(crate) fn fit_with_pattern(
    ds: &CompositionDataset,
    x: &CovariateMatrix,
    zp: &ZeroPattern,
    link: &LinkSpec,
    opts: &FitOptions,
) -> Result<FitOutcome> {
    let d = ds.num_components() - 1;
    let k = x.design().ncols();
    let kind = link.model_kind;

    let zero_free = zp.zero_free_rows();
    if zero_free.is_empty() {
        return Err(ZadrError::NoZeroFreeRows);
    }
    let needed = k + 1;
    if zero_free.len() < needed {
        return Err(ZadrError::InsufficientRows { needed, found: zero_free.len() });
    }
    let ds_zf = ds.select_rows(&zero_free);
    let x_zf = x.select_rows(&zero_free);

    // least-squares start on the alr scale
    let b0 = ols_init(&ds_zf, &x_zf, link)?;
    let phi0 = moment_precision(&ds_zf, &x_zf, &b0, link.ref_index)?;
    let precision0 = match kind {
        ModelKind::Simple => Precision::Phi(phi0),
        ModelKind::Mixed => {
            let mut gamma = vec![0.0; k];
            gamma[0] = phi0.ln();
            if let PrecisionInit::RandomNormal { scale } = opts.mixed_precision_init {
                let mut rng = rng_from_seed(opts.random_seed);
                let normal = Normal::new(0.0, scale).map_err(|e| ZadrError::InvalidArgument(e.to_string()))?;
                for g in gamma.iter_mut().skip(1) {
                    *g = normal.sample(&mut rng);
                }
            }
            Precision::Gamma(gamma)
        }
    };
    let start = pack_params(&b0, &precision0);

    let p_hat = estimate_p(zp);

    // zero-free rows, plain likelihood
    let data_zf = LikelihoodData::new(ds, x, None, Some(&zero_free), link.ref_index, opts.zero_mode)?;
    let ini = maximize(&data_zf, kind, &start, &opts.optimizer)?;
    let initial = build_model(&ini, kind, d, k, ini.loglik, p_hat.clone(), Stage::ZeroFreeInitial, link, opts, ds, x)?;

    if !zp.has_zeros() {
        // both objectives coincide and the pattern term is zero
        let mut final_model = initial.clone();
        final_model.stage = Stage::Final;
        final_model.loglik = ini.loglik + binary_loglik(zp, &p_hat)?;
        return Ok(FitOutcome { initial, final_model });
    }

    // all rows, zero-adjusted likelihood
    let data_all = LikelihoodData::new(ds, x, Some(zp), None, link.ref_index, opts.zero_mode)?;
    let fin = maximize(&data_all, kind, &ini.theta, &opts.optimizer)?;
    let loglik = fin.loglik + binary_loglik(zp, &p_hat)?;
    let final_model = build_model(&fin, kind, d, k, loglik, p_hat, Stage::Final, link, opts, ds, x)?;
    Ok(FitOutcome { initial, final_model })
}

/// Row-wise Dirichlet means `a*` under the model.
pub fn fitted_values(model: &ZadrModel, x: &CovariateMatrix) -> Result<CompositionDataset> {
    if x.design().ncols() != model.b.ncols() {
        return Err(ZadrError::SchemaMismatch(format!(
            "model has {} design columns, covariates have {}",
            model.b.ncols(),
            x.design().ncols()
        )));
    }
    let d = model.num_components();
    let mut out = DMatrix::zeros(x.n(), d);
    for i in 0..x.n() {
        let a = link_alpha(&x.row(i), &model.b, model.link.ref_index)?;
        for j in 0..d {
            out[(i, j)] = a[j];
        }
    }
    let row_ids = crate::compositions::default_row_ids(x.n());
    CompositionDataset::new(out, model.component_names.clone(), row_ids, 1e-8)
}

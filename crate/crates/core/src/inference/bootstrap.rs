//! Parametric bootstrap from a fitted model, preserving the observed zero
//! pattern row for row.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostic::diagnostic_t;
use super::generate::{as_dataset, simulate_responses};
use crate::compositions::{zero_pattern, CompositionDataset, CovariateMatrix};
use crate::error::{Result, ZadrError};
use crate::random::{derive_seed, rng_from_seed};
use crate::zadr::fit::fit_with_pattern;
use crate::zadr::{FitOptions, ZadrModel};

/// Fewest successful replicates accepted.
pub const MIN_REPLICATES: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    /// The zero mode and link are taken from the model being resampled.
    pub fit_options: FitOptions,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self { replicates, seed, fit_options: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Diagnostic `T` of each successful replicate, in replicate order.
    pub replicate_stats: Vec<f64>,
    /// Final-model parameters of each successful replicate.
    pub replicate_params: Vec<Vec<f64>>,
    /// Mean replicate estimate minus the fitted estimate, per parameter.
    pub bias: Vec<f64>,
    /// Standard deviation of the replicate estimates, per parameter.
    pub replicate_sd: Vec<f64>,
    pub pvalue: Option<f64>,
    /// Successful replicates.
    #[serde(rename = "B")]
    pub replicates: usize,
    pub requested: usize,
    pub master_seed: u64,
    pub failures: usize,
}

/// `(#{T_b >= T_obs} + 1) / (B + 1)`.
pub fn pvalue_from_replicates(t_observed: f64, stats: &[f64]) -> f64 {
    let exceed = stats.iter().filter(|&&t| t >= t_observed).count();
    (exceed as f64 + 1.0) / (stats.len() as f64 + 1.0)
}

struct Replicate {
    t: f64,
    params: Vec<f64>,
}

fn run_replicate(
    model: &ZadrModel,
    x: &CovariateMatrix,
    supports: &[Vec<usize>],
    opts: &FitOptions,
    seed: u64,
) -> Option<Replicate> {
    let mut rng = rng_from_seed(seed);
    let values = simulate_responses(model, x, supports, &mut rng).ok()?;
    let ds = as_dataset(values, model, supports)?;
    let zp = zero_pattern(&ds);
    let opts = FitOptions { random_seed: derive_seed(seed, 1), zero_mode: model.zero_mode, ..*opts };
    let outcome = fit_with_pattern(&ds, x, &zp, &model.link, &opts).ok()?;
    if !outcome.initial.converged || !outcome.final_model.converged {
        return None;
    }
    let diag = diagnostic_t(&outcome.initial, &outcome.final_model).ok()?;
    if !diag.t.is_finite() {
        return None;
    }
    Some(Replicate { t: diag.t, params: outcome.final_model.params() })
}

/// Runs the bootstrap; computes the p-value when `t_observed` is given and
/// the bias of the final estimates in any case.
pub fn bootstrap(
    final_model: &ZadrModel,
    ds: &CompositionDataset,
    x: &CovariateMatrix,
    t_observed: Option<f64>,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    if cfg.replicates < MIN_REPLICATES {
        return Err(ZadrError::InvalidArgument(format!("B must be >= {MIN_REPLICATES}, got {}", cfg.replicates)));
    }
    if ds.n() != x.n() {
        return Err(ZadrError::DimensionMismatch("dataset and design row counts differ".into()));
    }
    if ds.num_components() != final_model.num_components() || x.design().ncols() != final_model.b.ncols() {
        return Err(ZadrError::SchemaMismatch("data do not match the model".into()));
    }
    cfg.fit_options.validate()?;
    let supports = zero_pattern(ds).nonzero_sets;

    let results: Vec<Option<Replicate>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| run_replicate(final_model, x, &supports, &cfg.fit_options, derive_seed(cfg.seed, b as u64)))
        .collect();

    let failures = results.iter().filter(|r| r.is_none()).count();
    let ok: Vec<Replicate> = results.into_iter().flatten().collect();
    if ok.len() < MIN_REPLICATES {
        return Err(ZadrError::TooFewSuccessfulReplicates { successes: ok.len(), needed: MIN_REPLICATES });
    }

    let estimate = final_model.params();
    let m = ok.len() as f64;
    let np = estimate.len();
    let mut mean = vec![0.0; np];
    for r in &ok {
        for (acc, v) in mean.iter_mut().zip(&r.params) {
            *acc += v / m;
        }
    }
    let replicate_sd: Vec<f64> = (0..np)
        .map(|j| {
            let ss: f64 = ok.iter().map(|r| (r.params[j] - mean[j]).powi(2)).sum();
            (ss / (m - 1.0)).sqrt()
        })
        .collect();
    let bias = mean.iter().zip(&estimate).map(|(a, b)| a - b).collect();
    let replicate_stats: Vec<f64> = ok.iter().map(|r| r.t).collect();
    let pvalue = t_observed.map(|t| pvalue_from_replicates(t, &replicate_stats));

    Ok(BootstrapResult {
        replicate_params: ok.into_iter().map(|r| r.params).collect(),
        replicate_stats,
        bias,
        replicate_sd,
        pvalue,
        replicates: m as usize,
        requested: cfg.replicates,
        master_seed: cfg.seed,
        failures,
    })
}

/// Bootstrap p-value of the zero-effect diagnostic.
pub fn bootstrap_pvalue(
    t_observed: f64,
    final_model: &ZadrModel,
    ds: &CompositionDataset,
    x: &CovariateMatrix,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    bootstrap(final_model, ds, x, Some(t_observed), cfg)
}

/// Bootstrap bias of the final estimates.
pub fn bootstrap_bias(
    final_model: &ZadrModel,
    ds: &CompositionDataset,
    x: &CovariateMatrix,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    bootstrap(final_model, ds, x, None, cfg)
}

//! Monte-Carlo study of estimator mean squared error against sample size.

use std::io::Write;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{as_dataset, simulate_responses};
use crate::compositions::{zero_pattern, CovariateMatrix};
use crate::error::{Result, ZadrError};
use crate::random::{derive_seed, rng_from_seed};
use crate::zadr::fit::fit_with_pattern;
use crate::zadr::{FitOptions, ZadrModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub sizes: Vec<usize>,
    pub reps: usize,
    /// Share of rows given one structural zero.
    pub zero_fraction: f64,
    pub seed: u64,
    /// Components allowed to be zero; defaults to every non-reference one.
    pub zero_components: Option<Vec<usize>>,
    pub fit_options: FitOptions,
}

impl SimulationConfig {
    pub fn new(sizes: Vec<usize>, reps: usize, zero_fraction: f64, seed: u64) -> Self {
        Self { sizes, reps, zero_fraction, seed, zero_components: None, fit_options: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationCell {
    pub n: usize,
    pub parameter: String,
    pub mse: f64,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub sizes: Vec<usize>,
    pub parameter_names: Vec<String>,
    pub true_values: Vec<f64>,
    /// Ordered by size, then parameter.
    pub cells: Vec<SimulationCell>,
    pub reps: usize,
    pub zero_fraction: f64,
    pub seed: u64,
}

impl SimulationReport {
    pub fn cell(&self, n: usize, parameter: &str) -> Option<&SimulationCell> {
        self.cells.iter().find(|c| c.n == n && c.parameter == parameter)
    }

    /// MSEs for one sample size in parameter order.
    pub fn mse_at(&self, n: usize) -> Vec<f64> {
        self.cells.iter().filter(|c| c.n == n).map(|c| c.mse).collect()
    }

    /// CSV with columns `n,parameter,MSE,successes`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["n", "parameter", "MSE", "successes"])?;
        for c in &self.cells {
            wtr.write_record([c.n.to_string(), c.parameter.clone(), format_real(c.mse), c.successes.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal form.
pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

fn one_replicate(
    truth: &ZadrModel,
    design: &CovariateMatrix,
    n: usize,
    zero_rows: usize,
    allowed: &[usize],
    opts: &FitOptions,
    seed: u64,
) -> Option<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    let base = design.n();
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..base)).collect();
    let x = design.select_rows(&rows);
    let d = truth.num_components();
    let mut supports: Vec<Vec<usize>> = vec![(0..d).collect(); n];
    for i in sample_indices(&mut rng, n, zero_rows) {
        let drop = allowed[rng.random_range(0..allowed.len())];
        supports[i] = (0..d).filter(|&j| j != drop).collect();
    }
    let values = simulate_responses(truth, &x, &supports, &mut rng).ok()?;
    let ds = as_dataset(values, truth, &supports)?;
    let zp = zero_pattern(&ds);
    let opts = FitOptions { random_seed: derive_seed(seed, 1), zero_mode: truth.zero_mode, ..*opts };
    let out = fit_with_pattern(&ds, &x, &zp, &truth.link, &opts).ok()?;
    if !out.initial.converged || !out.final_model.converged {
        return None;
    }
    Some(out.final_model.params())
}

/// For each size, draws `reps` datasets from `truth` (design rows resampled
/// with replacement from `design`, a `zero_fraction` share of rows with one
/// component removed), refits, and reports the MSE of every parameter.
pub fn run_simulation_study(truth: &ZadrModel, design: &CovariateMatrix, cfg: &SimulationConfig) -> Result<SimulationReport> {
    if cfg.reps == 0 {
        return Err(ZadrError::InvalidArgument("reps must be >= 1".into()));
    }
    if cfg.sizes.is_empty() {
        return Err(ZadrError::InvalidArgument("no sample sizes given".into()));
    }
    if !(0.0..=1.0).contains(&cfg.zero_fraction) {
        return Err(ZadrError::InvalidArgument("zero fraction must lie in [0, 1]".into()));
    }
    if design.design().ncols() != truth.b.ncols() {
        return Err(ZadrError::SchemaMismatch("design width differs from the model".into()));
    }
    cfg.fit_options.validate()?;
    let d = truth.num_components();
    let allowed: Vec<usize> = match &cfg.zero_components {
        Some(v) => v.clone(),
        None => (0..d).filter(|&j| j != truth.link.ref_index).collect(),
    };
    if allowed.is_empty() || allowed.iter().any(|&j| j >= d) {
        return Err(ZadrError::InvalidArgument("invalid set of zero components".into()));
    }
    if cfg.zero_fraction > 0.0 && d < 3 {
        return Err(ZadrError::InvalidArgument("zeros need at least three components".into()));
    }

    let truth_params = truth.params();
    let np = truth_params.len();
    let names = truth.parameter_names();
    let mut cells = Vec::with_capacity(cfg.sizes.len() * np);
    for (si, &n) in cfg.sizes.iter().enumerate() {
        if n == 0 {
            return Err(ZadrError::InvalidArgument("sample size must be positive".into()));
        }
        let zero_rows = (cfg.zero_fraction * n as f64).round() as usize;
        let size_seed = derive_seed(cfg.seed, si as u64);
        let estimates: Vec<Option<Vec<f64>>> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| one_replicate(truth, design, n, zero_rows, &allowed, &cfg.fit_options, derive_seed(size_seed, r as u64)))
            .collect();
        let ok: Vec<&Vec<f64>> = estimates.iter().flatten().collect();
        let successes = ok.len();
        for j in 0..np {
            let mse = if successes == 0 {
                f64::NAN
            } else {
                ok.iter().map(|e| (e[j] - truth_params[j]).powi(2)).sum::<f64>() / successes as f64
            };
            cells.push(SimulationCell { n, parameter: names[j].clone(), mse, successes });
        }
    }
    Ok(SimulationReport {
        sizes: cfg.sizes.clone(),
        parameter_names: names,
        true_values: truth_params,
        cells,
        reps: cfg.reps,
        zero_fraction: cfg.zero_fraction,
        seed: cfg.seed,
    })
}

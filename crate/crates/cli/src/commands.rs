use std::path::Path;

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use zadr_core::inference::{bootstrap, format_real, BootstrapConfig, MIN_REPLICATES};
use zadr_core::io::{covariates_from_table, Table};
use zadr_core::zadr::aitchison::{fit_aitchison, AitchisonModel};
use zadr_core::{
    diagnostic_t, fitted_values, run_simulation_study, CovariateMatrix, FitOptions, LinkSpec, ModelKind,
    Precision, SimulationConfig, ZadrError, ZadrModel,
};

use crate::data::{
    companion_path, load_model, load_zadr_model, raw_covariates, read_data, read_data_for, write_csv, write_text,
    LoadedModel,
};
use crate::{Columns, KindArg, NotConverged, ZeroModeArg};

fn cell(est: f64, se: f64) -> String {
    format!("{est:.3}({se:.3})")
}

fn print_rows(header: &[String], rows: &[(String, Vec<String>)]) {
    let label_w = rows.iter().map(|r| r.0.len()).chain([9]).max().unwrap_or(9);
    let col_w = rows.iter().flat_map(|r| r.1.iter().map(String::len)).chain(header.iter().map(String::len)).max().unwrap_or(12);
    print!("{:<label_w$}", "");
    for h in header {
        print!("  {h:>col_w$}");
    }
    println!();
    for (label, cells) in rows {
        print!("{label:<label_w$}");
        for c in cells {
            print!("  {c:>col_w$}");
        }
        println!();
    }
}

/// Estimates with standard errors: one row per non-reference component, then
/// the precision block.
pub fn print_estimates(model: &ZadrModel) {
    let k = model.b.ncols();
    let se = model.standard_errors();
    let mut rows = Vec::new();
    let mut r = 0;
    for (c, name) in model.component_names.iter().enumerate() {
        if c == model.link.ref_index {
            continue;
        }
        let cells = (0..k).map(|j| cell(model.b[(r, j)], se[r * k + j])).collect();
        rows.push((name.clone(), cells));
        r += 1;
    }
    let off = model.b.len();
    match &model.precision {
        Precision::Phi(phi) => {
            let mut cells = vec![cell(*phi, se[off])];
            cells.resize(k, String::new());
            rows.push(("phi".into(), cells));
        }
        Precision::Gamma(g) => {
            rows.push(("phi".into(), g.iter().enumerate().map(|(j, v)| cell(*v, se[off + j])).collect()));
        }
    }
    print_rows(&model.covariate_names, &rows);
}

fn print_aitchison(model: &AitchisonModel) {
    let mut rows = Vec::new();
    let mut r = 0;
    for (c, name) in model.component_names.iter().enumerate() {
        if c == model.ref_index {
            continue;
        }
        let cells = (0..model.b.ncols()).map(|j| cell(model.b[(r, j)], model.standard_errors[(r, j)])).collect();
        rows.push((name.clone(), cells));
        r += 1;
    }
    print_rows(&model.covariate_names, &rows);
}

fn save_model(model: &ZadrModel, path: &Path) -> Result<()> {
    model.save(path).with_context(|| format!("writing {}", path.display()))
}

pub fn fit_cmd_options(zero_mode: ZeroModeArg, seed: u64) -> FitOptions {
    FitOptions { zero_mode: zero_mode.into(), random_seed: seed, ..FitOptions::default() }
}

pub fn fit(
    input: &Path,
    columns: &Columns,
    kind: KindArg,
    reference: Option<&str>,
    zero_mode: ZeroModeArg,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let (ds, x) = read_data(input, columns)?;
    let ref_index = match reference {
        Some(name) => ds
            .component_names()
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ZadrError::InvalidArgument(format!("unknown reference component '{name}'")))?,
        None => 0,
    };
    let model_kind = match kind {
        KindArg::AitchisonOls => {
            let m = fit_aitchison(&ds, &x, ref_index)?;
            m.save(out).with_context(|| format!("writing {}", out.display()))?;
            println!("Aitchison least-squares model on {} zero-free rows (reference {})", m.rows_used, ds.component_names()[ref_index]);
            print_aitchison(&m);
            return Ok(());
        }
        KindArg::Simple => ModelKind::Simple,
        KindArg::Mixed => ModelKind::Mixed,
    };
    let link = LinkSpec::new(ref_index, model_kind);
    let outcome = zadr_core::fit(&ds, &x, &link, &fit_cmd_options(zero_mode, seed))?;
    save_model(&outcome.final_model, out)?;
    let initial_path = companion_path(out, "initial");
    save_model(&outcome.initial, &initial_path)?;

    let m = &outcome.final_model;
    let zero_rows = ds.n() - (0..ds.n()).filter(|&i| ds.row(i).iter().all(|v| *v > 0.0)).count();
    println!(
        "{} ZADR model, {} rows ({} with zeros), reference {}",
        model_kind.as_str(),
        ds.n(),
        zero_rows,
        ds.component_names()[ref_index]
    );
    print_estimates(m);
    println!("log-likelihood {:.3} (initial, zero-free rows: {:.3})", m.loglik, outcome.initial.loglik);
    println!("wrote {} and {}", out.display(), initial_path.display());
    if !m.converged || !outcome.initial.converged {
        return Err(NotConverged(format!(
            "optimizer did not converge (initial: {:?}, final: {:?}); models written with converged=false",
            outcome.initial.termination, m.termination
        ))
        .into());
    }
    Ok(())
}

pub fn predict(model_path: &Path, input: &Path, out: Option<&Path>) -> Result<()> {
    let model = load_model(model_path)?;
    let (components, covariates) = match &model {
        LoadedModel::Zadr(m) => (m.component_names.clone(), m.covariate_names.clone()),
        LoadedModel::Aitchison(m) => (m.component_names.clone(), m.covariate_names.clone()),
    };
    let table = Table::read(input)?;
    let x = covariates_from_table(&table, &raw_covariates(&covariates))
        .with_context(|| format!("covariates of {} do not match the model", input.display()))?;
    let fitted = match &model {
        LoadedModel::Zadr(m) => fitted_values(m, &x)?,
        LoadedModel::Aitchison(m) => m.fitted_values(&x)?,
    };
    let rows: Vec<Vec<String>> = (0..fitted.n()).map(|i| fitted.row(i).into_iter().map(format_real).collect()).collect();
    write_csv(out, &components, &rows)
}

pub fn diagnose(
    input: &Path,
    model_path: &Path,
    replicates: usize,
    seed: u64,
    bias: bool,
    out: Option<&Path>,
    tolerance: f64,
) -> Result<()> {
    if replicates < MIN_REPLICATES {
        return Err(ZadrError::InvalidArgument(format!("B must be ≥ {MIN_REPLICATES}, got {replicates}")).into());
    }
    let final_model = load_zadr_model(model_path)?;
    let (ds, x) = read_data_for(input, &final_model.component_names, &final_model.covariate_names, tolerance)?;
    let opts = FitOptions { zero_mode: final_model.zero_mode, random_seed: final_model.seed, ..FitOptions::default() };
    let initial_path = companion_path(model_path, "initial");
    let initial = if initial_path.exists() {
        load_zadr_model(&initial_path)?
    } else {
        log::info!("{} not found; refitting the zero-free model", initial_path.display());
        zadr_core::fit(&ds, &x, &final_model.link, &opts)?.initial
    };
    let mut diag = diagnostic_t(&initial, &final_model)?;
    let cfg = BootstrapConfig { replicates, seed, fit_options: opts };
    let boot = bootstrap(&final_model, &ds, &x, Some(diag.t), &cfg)?;
    diag.pvalue = boot.pvalue;
    diag.replicates = boot.replicates;
    diag.failures = boot.failures;
    diag.seed = Some(seed);

    println!("T = {:.3}", diag.t);
    println!("B = {} (requested {})", boot.replicates, boot.requested);
    println!("failures = {}", boot.failures);
    println!("p-value = {:.3}", boot.pvalue.unwrap_or(f64::NAN));
    if diag.sigma_pseudo {
        println!("note: combined covariance was ill-conditioned; a pseudo-inverse was used");
    }
    if bias {
        let names = final_model.parameter_names();
        let est = final_model.params();
        let header: Vec<String> = ["estimate", "bias", "corrected", "boot sd"].iter().map(|s| s.to_string()).collect();
        let rows: Vec<(String, Vec<String>)> = names
            .iter()
            .enumerate()
            .map(|(j, n)| {
                let e = est[j];
                let b = boot.bias[j];
                (n.clone(), vec![format!("{e:.3}"), format!("{b:.3}"), format!("{:.3}", e - b), format!("{:.3}", boot.replicate_sd[j])])
            })
            .collect();
        print_rows(&header, &rows);
        let boot_path = companion_path(model_path, "bootstrap");
        write_text(&boot_path, &(serde_json::to_string_pretty(&boot)? + "\n"))?;
        println!("wrote {}", boot_path.display());
    }
    let out_path = out.map(Path::to_path_buf).unwrap_or_else(|| companion_path(model_path, "diagnostic"));
    write_text(&out_path, &(diag.to_json()? + "\n"))?;
    println!("wrote {}", out_path.display());
    Ok(())
}

/// Intercept plus `log(1..=30)`.
fn default_design(model: &ZadrModel) -> Result<CovariateMatrix> {
    if model.b.ncols() != 2 {
        return Err(ZadrError::InvalidArgument(
            "--input is required for models with other than one covariate".into(),
        )
        .into());
    }
    let raw = DMatrix::from_fn(30, 1, |i, _| ((i + 1) as f64).ln());
    Ok(CovariateMatrix::with_intercept(&raw, &model.covariate_names[1..])?)
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    model_path: &Path,
    sizes: Vec<usize>,
    reps: usize,
    zero_fraction: f64,
    zero_components: Option<Vec<String>>,
    input: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let truth = load_zadr_model(model_path)?;
    let design = match input {
        Some(p) => covariates_from_table(&Table::read(p)?, &raw_covariates(&truth.covariate_names))
            .with_context(|| format!("covariates of {} do not match the model", p.display()))?,
        None => default_design(&truth)?,
    };
    let zero_components = match zero_components {
        Some(names) => Some(
            names
                .iter()
                .map(|n| {
                    truth
                        .component_names
                        .iter()
                        .position(|c| c == n)
                        .ok_or_else(|| ZadrError::InvalidArgument(format!("unknown component '{n}'")))
                })
                .collect::<std::result::Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let mut cfg = SimulationConfig::new(sizes, reps, zero_fraction, seed);
    cfg.zero_components = zero_components;
    cfg.fit_options.zero_mode = truth.zero_mode;
    let report = run_simulation_study(&truth, &design, &cfg)?;
    let file = std::fs::File::create(out).map_err(|e| ZadrError::Io(format!("{}: {e}", out.display())))?;
    report.write_csv(std::io::BufWriter::new(file))?;
    for &n in &report.sizes {
        let succ = report.cells.iter().find(|c| c.n == n).map(|c| c.successes).unwrap_or(0);
        let mse: Vec<String> = report.mse_at(n).iter().map(|v| format!("{v:.4}")).collect();
        println!("n={n} ({succ}/{reps} fits): {}", mse.join(" "));
    }
    println!("wrote {}", out.display());
    Ok(())
}

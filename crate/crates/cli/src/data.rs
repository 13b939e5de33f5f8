use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use zadr_core::compositions::INTERCEPT_NAME;
use zadr_core::io::{dataset_from_table, ColumnSelection, Table};
use zadr_core::zadr::aitchison::{AitchisonModel, AITCHISON_KIND};
use zadr_core::{CompositionDataset, CovariateMatrix, ZadrError, ZadrModel};

use crate::Columns;

pub fn read_data(input: &Path, columns: &Columns) -> Result<(CompositionDataset, CovariateMatrix)> {
    let table = Table::read(input)?;
    let sel = ColumnSelection { components: columns.components.clone(), covariates: columns.covariates.clone() };
    dataset_from_table(&table, &sel, columns.tolerance).with_context(|| format!("reading {}", input.display()))
}

/// Covariate names without the intercept.
pub fn raw_covariates(names: &[String]) -> Vec<String> {
    names.iter().filter(|n| n.as_str() != INTERCEPT_NAME).cloned().collect()
}

/// Reads the columns a fitted model expects.
pub fn read_data_for(
    input: &Path,
    components: &[String],
    covariates: &[String],
    tolerance: f64,
) -> Result<(CompositionDataset, CovariateMatrix)> {
    let columns = Columns {
        components: Some(components.to_vec()),
        covariates: Some(raw_covariates(covariates)),
        tolerance,
    };
    read_data(input, &columns)
}

pub enum LoadedModel {
    Zadr(ZadrModel),
    Aitchison(AitchisonModel),
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| ZadrError::Io(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not a model file", path.display()))?;
    let kind = value.get("model_kind").and_then(|v| v.as_str()).unwrap_or_default();
    let model = if kind == AITCHISON_KIND {
        LoadedModel::Aitchison(AitchisonModel::from_json(&text)?)
    } else {
        LoadedModel::Zadr(ZadrModel::from_json(&text).with_context(|| format!("loading {}", path.display()))?)
    };
    Ok(model)
}

pub fn load_zadr_model(path: &Path) -> Result<ZadrModel> {
    match load_model(path)? {
        LoadedModel::Zadr(m) => Ok(m),
        LoadedModel::Aitchison(_) => {
            Err(ZadrError::KindMismatch).with_context(|| format!("{} is an {AITCHISON_KIND} model", path.display()))
        }
    }
}

/// `dir/model.json` -> `dir/model.<suffix>.json`.
pub fn companion_path(model: &Path, suffix: &str) -> PathBuf {
    let stem = model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    model.with_file_name(format!("{stem}.{suffix}.json"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| ZadrError::Io(format!("{}: {e}", path.display())).into())
}

/// Writes CSV rows to a file, or to standard output when `path` is `None`.
pub fn write_csv(path: Option<&Path>, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(
            std::fs::File::create(p).map_err(|e| ZadrError::Io(format!("{}: {e}", p.display())))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header).map_err(ZadrError::from)?;
    for r in rows {
        w.write_record(r).map_err(ZadrError::from)?;
    }
    w.flush().map_err(ZadrError::from)?;
    Ok(())
}

//! CSV ingestion.
//!
//! Composition columns are named explicitly or carry a `y:` prefix (which is
//! stripped from the component name). Covariates are named explicitly or are
//! every remaining numeric column. A non-numeric column, if any, supplies row
//! ids. Empty cells are errors, never zeros.

use std::path::Path;

use nalgebra::DMatrix;

use crate::compositions::{default_row_ids, CompositionDataset, CovariateMatrix};
use crate::error::{Result, ZadrError};

pub const COMPONENT_PREFIX: &str = "y:";

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn from_reader<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        if rows.is_empty() {
            return Err(ZadrError::EmptyInput);
        }
        Ok(Self { headers, rows })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| ZadrError::Io(format!("{}: {e}", path.display())))?;
        Self::from_reader(f)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ZadrError::SchemaMismatch(format!("no column named '{name}'")))
    }

    fn parse_cell(&self, row: usize, col: usize) -> Result<f64> {
        let cell = &self.rows[row][col];
        if cell.is_empty() {
            return Err(ZadrError::Csv(format!("empty cell at data row {}, column '{}'", row + 1, self.headers[col])));
        }
        let v: f64 = cell.parse().map_err(|_| {
            ZadrError::Csv(format!("data row {}, column '{}': '{cell}' is not a number", row + 1, self.headers[col]))
        })?;
        if !v.is_finite() {
            return Err(ZadrError::NonFinite { row, col });
        }
        Ok(v)
    }

    fn is_numeric(&self, col: usize) -> bool {
        self.rows.iter().all(|r| r.get(col).is_some_and(|c| c.is_empty() || c.parse::<f64>().is_ok()))
    }

    /// Numeric matrix of the named columns.
    pub fn numeric_columns(&self, cols: &[usize]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.rows.len(), cols.len());
        for i in 0..self.rows.len() {
            if self.rows[i].len() != self.headers.len() {
                return Err(ZadrError::Csv(format!("data row {} has the wrong number of fields", i + 1)));
            }
            for (k, &c) in cols.iter().enumerate() {
                m[(i, k)] = self.parse_cell(i, c)?;
            }
        }
        Ok(m)
    }

    /// Row ids from the first non-numeric column, or `1..n`.
    pub fn row_ids(&self, used: &[usize]) -> Vec<String> {
        let id_col = (0..self.headers.len()).find(|c| !used.contains(c) && !self.is_numeric(*c));
        match id_col {
            Some(c) => self.rows.iter().map(|r| r[c].clone()).collect(),
            None => default_row_ids(self.rows.len()),
        }
    }

    pub fn component_columns(&self, components: Option<&[String]>) -> Result<(Vec<usize>, Vec<String>)> {
        match components {
            Some(names) if !names.is_empty() => {
                let idx = names
                    .iter()
                    .map(|n| {
                        self.column_index(n).or_else(|_| self.column_index(&format!("{COMPONENT_PREFIX}{n}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((idx, names.to_vec()))
            }
            _ => {
                let idx: Vec<usize> =
                    (0..self.headers.len()).filter(|&c| self.headers[c].starts_with(COMPONENT_PREFIX)).collect();
                if idx.is_empty() {
                    return Err(ZadrError::SchemaMismatch(format!(
                        "no composition columns: pass a component list or prefix headers with '{COMPONENT_PREFIX}'"
                    )));
                }
                let names = idx.iter().map(|&c| self.headers[c][COMPONENT_PREFIX.len()..].to_string()).collect();
                Ok((idx, names))
            }
        }
    }

    pub fn covariate_columns(&self, covariates: Option<&[String]>, exclude: &[usize]) -> Result<(Vec<usize>, Vec<String>)> {
        match covariates {
            Some(names) => {
                let idx = names.iter().map(|n| self.column_index(n)).collect::<Result<Vec<_>>>()?;
                Ok((idx, names.to_vec()))
            }
            None => {
                let idx: Vec<usize> = (0..self.headers.len())
                    .filter(|c| !exclude.contains(c) && !self.headers[*c].starts_with(COMPONENT_PREFIX) && self.is_numeric(*c))
                    .collect();
                let names = idx.iter().map(|&c| self.headers[c].clone()).collect();
                Ok((idx, names))
            }
        }
    }
}

/// Which columns to use.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnSelection {
    pub components: Option<Vec<String>>,
    pub covariates: Option<Vec<String>>,
}

pub fn dataset_from_table(
    table: &Table,
    sel: &ColumnSelection,
    tolerance: f64,
) -> Result<(CompositionDataset, CovariateMatrix)> {
    let (comp_idx, comp_names) = table.component_columns(sel.components.as_deref())?;
    let (cov_idx, cov_names) = table.covariate_columns(sel.covariates.as_deref(), &comp_idx)?;
    if let Some(c) = cov_idx.iter().find(|c| comp_idx.contains(c)) {
        return Err(ZadrError::SchemaMismatch(format!(
            "column '{}' is both a component and a covariate",
            table.headers[*c]
        )));
    }
    let values = table.numeric_columns(&comp_idx)?;
    let used: Vec<usize> = comp_idx.iter().chain(&cov_idx).copied().collect();
    let row_ids = table.row_ids(&used);
    let ds = CompositionDataset::new(values, comp_names, row_ids, tolerance)?;
    let raw = table.numeric_columns(&cov_idx)?;
    let x = CovariateMatrix::with_intercept(&raw, &cov_names)?;
    Ok((ds, x))
}

/// Covariates named `names` (without the intercept), in that order.
pub fn covariates_from_table(table: &Table, names: &[String]) -> Result<CovariateMatrix> {
    let idx = names.iter().map(|n| table.column_index(n)).collect::<Result<Vec<_>>>()?;
    let raw = table.numeric_columns(&idx)?;
    CovariateMatrix::with_intercept(&raw, names)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "site,y:A,y:B,y:C,depth\ns1,0.2,0.3,0.5,1.5\ns2,0.6,0.4,0,2.5\ns3,0.1,0.1,0.8,3.0\n";

    #[test]
    fn prefix_convention() {
        let t = Table::from_reader(CSV.as_bytes()).unwrap();
        let (ds, x) = dataset_from_table(&t, &ColumnSelection::default(), 1e-8).unwrap();
        assert_eq!(ds.component_names(), ["A", "B", "C"]);
        assert_eq!(ds.row_ids(), ["s1", "s2", "s3"]);
        assert_eq!(x.covariate_names(), ["(Intercept)", "depth"]);
        assert_eq!(x.design()[(1, 1)], 2.5);
        assert_eq!(ds.values()[(1, 2)], 0.0);
    }

    #[test]
    fn explicit_lists() {
        let csv = "a,b,c,t,u\n0.5,0.25,0.25,1,9\n0.2,0.2,0.6,2,8\n";
        let t = Table::from_reader(csv.as_bytes()).unwrap();
        let sel = ColumnSelection {
            components: Some(vec!["a".into(), "b".into(), "c".into()]),
            covariates: Some(vec!["t".into()]),
        };
        let (ds, x) = dataset_from_table(&t, &sel, 1e-8).unwrap();
        assert_eq!(ds.num_components(), 3);
        assert_eq!(x.p(), 1);
    }

    #[test]
    fn empty_cells_are_errors() {
        let csv = "y:a,y:b,t\n0.5,,1\n0.5,0.5,2\n";
        let t = Table::from_reader(csv.as_bytes()).unwrap();
        let r = dataset_from_table(&t, &ColumnSelection::default(), 1e-8);
        assert!(matches!(r, Err(ZadrError::Csv(_))), "{r:?}");
    }

    #[test]
    fn unknown_column() {
        let t = Table::from_reader(CSV.as_bytes()).unwrap();
        let sel = ColumnSelection { components: None, covariates: Some(vec!["nope".into()]) };
        assert!(matches!(dataset_from_table(&t, &sel, 1e-8), Err(ZadrError::SchemaMismatch(_))));
    }
}

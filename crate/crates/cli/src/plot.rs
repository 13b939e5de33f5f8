//! Plot data and minimal SVG rendering for stacked bars and ternary diagrams.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use zadr_core::inference::format_real;
use zadr_core::{fitted_values, CompositionDataset, ZadrError};

use crate::data::{load_model, raw_covariates, read_data, write_csv, write_text, LoadedModel};
use crate::Columns;

const PALETTE: [&str; 8] = ["#1b1b1b", "#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"];

/// Ternary projection with parts 1, 2, 3 at (0,0), (1,0), (1/2, √3/2).
pub fn barycentric(y: &[f64]) -> (f64, f64) {
    (y[1] + 0.5 * y[2], y[2] * 3f64.sqrt() / 2.0)
}

pub fn plot(
    input: &Path,
    columns: &Columns,
    model_path: Option<&Path>,
    ternary: bool,
    svg: Option<&Path>,
    order_by: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let model = model_path.map(load_model).transpose()?;
    let mut columns = columns.clone();
    if let Some(m) = &model {
        let (comps, covs) = match m {
            LoadedModel::Zadr(m) => (&m.component_names, &m.covariate_names),
            LoadedModel::Aitchison(m) => (&m.component_names, &m.covariate_names),
        };
        columns.components.get_or_insert_with(|| comps.clone());
        columns.covariates.get_or_insert_with(|| raw_covariates(covs));
    }
    let (ds, x) = read_data(input, &columns)?;
    let d = ds.num_components();
    if ternary && d != 3 {
        return Err(ZadrError::TernaryRequiresThree(d).into());
    }
    let fitted: Option<CompositionDataset> = match &model {
        Some(LoadedModel::Zadr(m)) => Some(fitted_values(m, &x)?),
        Some(LoadedModel::Aitchison(m)) => Some(m.fitted_values(&x)?),
        None => None,
    };

    // row order by the chosen covariate
    let order_col = match order_by {
        Some(name) => Some(
            x.covariate_names()
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| ZadrError::InvalidArgument(format!("unknown covariate '{name}'")))?,
        ),
        None => (x.p() > 0).then_some(1),
    };
    let key: Vec<f64> = (0..ds.n()).map(|i| order_col.map_or(i as f64, |c| x.design()[(i, c)])).collect();
    let mut order: Vec<usize> = (0..ds.n()).collect();
    order.sort_by(|&a, &b| key[a].total_cmp(&key[b]));
    let key_name = order_col.map_or("row".to_string(), |c| x.covariate_names()[c].clone());
    let names = ds.component_names().to_vec();

    if ternary {
        let mut rows = Vec::new();
        for &i in &order {
            let (px, py) = barycentric(&ds.row(i));
            rows.push(vec!["observed".into(), ds.row_ids()[i].clone(), format_real(key[i]), format_real(px), format_real(py)]);
        }
        if let Some(f) = &fitted {
            for &i in &order {
                let (px, py) = barycentric(&f.row(i));
                rows.push(vec!["fitted".into(), ds.row_ids()[i].clone(), format_real(key[i]), format_real(px), format_real(py)]);
            }
        }
        let header: Vec<String> = ["series", "id", key_name.as_str(), "x", "y"].iter().map(|s| s.to_string()).collect();
        write_csv(out, &header, &rows)?;
        if let Some(path) = svg {
            write_text(path, &ternary_svg(&ds, fitted.as_ref(), &order, &names))?;
        }
    } else {
        let mut header = vec!["id".to_string(), key_name.clone()];
        header.extend(names.iter().cloned());
        if fitted.is_some() {
            header.extend(names.iter().map(|n| format!("fitted:{n}")));
        }
        let rows: Vec<Vec<String>> = order
            .iter()
            .map(|&i| {
                let mut r = vec![ds.row_ids()[i].clone(), format_real(key[i])];
                r.extend(ds.row(i).into_iter().map(format_real));
                if let Some(f) = &fitted {
                    r.extend(f.row(i).into_iter().map(format_real));
                }
                r
            })
            .collect();
        write_csv(out, &header, &rows)?;
        if let Some(path) = svg {
            write_text(path, &bar_svg(&ds, fitted.as_ref(), &order, &names, &key_name))?;
        }
    }
    Ok(())
}

fn ternary_svg(ds: &CompositionDataset, fitted: Option<&CompositionDataset>, order: &[usize], names: &[String]) -> String {
    let (size, pad) = (420.0, 40.0);
    let to_px = |(x, y): (f64, f64)| (pad + size * x, pad + size * (3f64.sqrt() / 2.0 - y));
    let mut s = String::new();
    let h = pad * 2.0 + size * 3f64.sqrt() / 2.0;
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{h:.0}">"#, size + 2.0 * pad);
    let v: Vec<(f64, f64)> = [(0.0, 0.0), (1.0, 0.0), (0.5, 3f64.sqrt() / 2.0)].into_iter().map(to_px).collect();
    let _ = writeln!(
        s,
        r##"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#f4f4f4" stroke="black"/>"##,
        v[0].0, v[0].1, v[1].0, v[1].1, v[2].0, v[2].1
    );
    let anchors = [(v[0].0, v[0].1 + 18.0), (v[1].0, v[1].1 + 18.0), (v[2].0, v[2].1 - 8.0)];
    for (name, (x, y)) in names.iter().zip(anchors) {
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle" font-size="14">{name}</text>"#);
    }
    for &i in order {
        let (x, y) = to_px(barycentric(&ds.row(i)));
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="black"/>"#);
    }
    if let Some(f) = fitted {
        let pts: Vec<String> = order
            .iter()
            .map(|&i| {
                let (x, y) = to_px(barycentric(&f.row(i)));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="2"/>"##, pts.join(" "));
    }
    s.push_str("</svg>\n");
    s
}

fn bar_svg(
    ds: &CompositionDataset,
    fitted: Option<&CompositionDataset>,
    order: &[usize],
    names: &[String],
    key_name: &str,
) -> String {
    let (w, h, pad) = (600.0, 300.0, 40.0);
    let bw = w / order.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}">"#,
        w + 2.0 * pad + 120.0,
        h + 2.0 * pad
    );
    for (slot, &i) in order.iter().enumerate() {
        let mut top = pad + h;
        for (j, v) in ds.row(i).iter().enumerate() {
            let hh = v * h;
            top -= hh;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{hh:.2}" fill="{}"/>"#,
                pad + slot as f64 * bw,
                bw * 0.9,
                PALETTE[j % PALETTE.len()]
            );
        }
    }
    if let Some(f) = fitted {
        // cumulative fitted boundaries, one line per component
        for j in 0..names.len() {
            let pts: Vec<String> = order
                .iter()
                .enumerate()
                .map(|(slot, &i)| {
                    let cum: f64 = f.row(i)[..=j].iter().sum();
                    format!("{:.2},{:.2}", pad + (slot as f64 + 0.45) * bw, pad + h - cum * h)
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="white" stroke-width="2" stroke-dasharray="4 2"/>"#,
                pts.join(" ")
            );
        }
    }
    for (j, name) in names.iter().enumerate() {
        let y = pad + 16.0 * j as f64;
        let _ = writeln!(s, r#"<rect x="{:.2}" y="{y:.2}" width="12" height="12" fill="{}"/>"#, pad + w + 10.0, PALETTE[j % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12">{name}</text>"#, pad + w + 28.0, y + 10.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{key_name}</text>"#, pad + w / 2.0, pad + h + 25.0);
    let _ = writeln!(s, r#"<text x="12" y="{:.2}" font-size="12" transform="rotate(-90 12 {:.2})">proportion</text>"#, pad + h / 2.0, pad + h / 2.0);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertices_and_centroid() {
        assert_eq!(barycentric(&[1.0, 0.0, 0.0]), (0.0, 0.0));
        assert_eq!(barycentric(&[0.0, 1.0, 0.0]), (1.0, 0.0));
        let (x, y) = barycentric(&[0.0, 0.0, 1.0]);
        assert!((x - 0.5).abs() < 1e-15 && (y - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let t = 1.0 / 3.0;
        let (x, y) = barycentric(&[t, t, t]);
        assert!((x - 0.5).abs() < 1e-15);
        assert!((y - 3f64.sqrt() / 6.0).abs() < 1e-15);
    }
}

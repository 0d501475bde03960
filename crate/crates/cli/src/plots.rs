//! Plot-ready CSV bundles built from sweep and tee outputs.

use std::collections::BTreeMap;

use nhtfim::entanglement::{tee_collapse, CollapseGrid};
use nhtfim::io::require_columns;
use nhtfim::{Error, Result};

use crate::tasks::num;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig6,
}

impl Figure {
    pub fn file_name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2_edge_modes.csv",
            Figure::Fig3 => "fig3_entropy.csv",
            Figure::Fig6 => "fig6_tee.csv",
        }
    }
}

/// Parsed CSV with the positions of the required columns.
#[derive(Debug, Clone)]
pub struct TableData {
    pub columns: Vec<usize>,
    pub records: Vec<Vec<String>>,
}

impl TableData {
    /// Value of required column `k` in record `r`.
    pub fn get(&self, r: usize, k: usize) -> &str {
        &self.records[r][self.columns[k]]
    }
}

/// Reads a CSV and checks that every `required` column is present.
pub fn read_table(bytes: &[u8], required: &[&str]) -> Result<TableData> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let csv_err = |e: csv::Error| Error::Validation(format!("csv: {e}"));
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let columns = require_columns(&header, required)?;
    let records = rd
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect::<Vec<_>>()).map_err(csv_err))
        .collect::<Result<Vec<_>>>()?;
    Ok(TableData { columns, records })
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Validation(format!("`{what}`: not a number: `{s}`")))
}

/// `alpha,mode_index,abs_eps` from a spectrum sweep over `alpha`.
pub fn fig2(sweep: &[u8]) -> Result<String> {
    let t = read_table(sweep, &["alpha", "observable", "index", "value"])?;
    let mut out = String::from("alpha,mode_index,abs_eps\n");
    for r in 0..t.records.len() {
        if t.get(r, 1) == "abs_eps" {
            out.push_str(&format!("{},{},{}\n", t.get(r, 0), t.get(r, 2), t.get(r, 3)));
        }
    }
    Ok(out)
}

/// `period,S_A,series` from an evolve sweep over `beta_J`; `series` holds β_J.
pub fn fig3(sweep: &[u8]) -> Result<String> {
    let t = read_table(sweep, &["beta_J", "observable", "index", "value"])?;
    let mut out = String::from("period,S_A,series\n");
    for r in 0..t.records.len() {
        if t.get(r, 1) == "S_A" {
            out.push_str(&format!("{},{},{}\n", t.get(r, 2), t.get(r, 3), t.get(r, 0)));
        }
    }
    Ok(out)
}

/// `beta_J,S_top,L,x_collapsed` with `x = (β_J - β_J0) L^ν`. Without a given
/// fit the collapse is recomputed from the data.
pub fn fig6(tee_csv: &[u8], fit: Option<(f64, f64)>) -> Result<String> {
    let t = read_table(tee_csv, &["L", "beta_J", "S_top"])?;
    let mut rows = Vec::with_capacity(t.records.len());
    for r in 0..t.records.len() {
        let l: usize = t.get(r, 0).trim().parse().map_err(|_| Error::Validation(format!("`L`: bad size `{}`", t.get(r, 0))))?;
        rows.push((l, parse_f64(t.get(r, 1), "beta_J")?, parse_f64(t.get(r, 2), "S_top")?));
    }
    let (beta0, nu) = match fit {
        Some(f) => f,
        None => {
            let mut curves: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
            for &(l, b, s) in &rows {
                curves.entry(l).or_default().push((b, s));
            }
            let c = tee_collapse(&curves, &CollapseGrid::default())?;
            (c.beta_j0, c.nu)
        }
    };
    let mut out = String::from("beta_J,S_top,L,x_collapsed\n");
    for (r, &(l, b, _)) in rows.iter().enumerate() {
        let x = (b - beta0) * (l as f64).powf(nu);
        out.push_str(&format!("{},{},{l},{}\n", t.get(r, 1), t.get(r, 2), num(x)));
    }
    Ok(out)
}

/// `(beta_J0, nu)` from a tee fit JSON.
pub fn parse_fit(text: &str) -> Result<(f64, f64)> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Validation(format!("fit json: {e}")))?;
    let field = |k: &str| v.get(k).and_then(|x| x.as_f64()).ok_or_else(|| Error::Validation(format!("fit json: missing number `{k}`")));
    Ok((field("beta_J0")?, field("nu")?))
}

use std::f64::consts::{FRAC_PI_4, PI};

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use super::dispersion::fold;
use super::transfer::{quasienergies_from_transfer, SpectrumReport, TransferMatrix};
use crate::error::{invalid, Result};
use crate::linalg::{c, C64};
use crate::model::{reduced_alpha, BoundaryCondition, LatticeSpec, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Zero,
    Pi,
}

impl std::fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EdgeKind::Zero => "zero",
            EdgeKind::Pi => "pi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeModeRecord {
    pub kind: EdgeKind,
    pub energy: C64,
    pub localization_length: f64,
    pub left_weight: f64,
    pub right_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeOptions {
    pub tol_edge: f64,
    /// Bound on `|Im ε|` for an edge mode; defaults to `tol_edge`, since the
    /// hybridization splitting of the two edges is complex and of order `e^{-L/ξ}`.
    pub tol_real: Option<f64>,
    /// Fraction of sites counted as "edge" at each end.
    pub edge_fraction: f64,
    pub min_edge_weight: f64,
}

impl Default for EdgeOptions {
    fn default() -> Self {
        EdgeOptions { tol_edge: 1e-3, tol_real: None, edge_fraction: 0.1, min_edge_weight: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeScan {
    pub report: SpectrumReport,
    /// Set within 0.1·π/4 of α = π/4, where edge modes delocalize at finite L.
    pub near_quarter_warning: bool,
}

impl EdgeScan {
    pub fn pairs(&self, kind: EdgeKind) -> usize {
        let n = self.report.edge_modes.iter().filter(|r| r.kind == kind).count();
        n.div_ceil(2)
    }
}

fn site_weights(v: ArrayView1<C64>) -> Vec<f64> {
    let w: Vec<f64> = v.as_slice().map_or_else(
        || (0..v.len() / 2).map(|j| v[2 * j].norm_sqr() + v[2 * j + 1].norm_sqr()).collect(),
        |s| s.chunks(2).map(|p| p[0].norm_sqr() + p[1].norm_sqr()).collect(),
    );
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Decay length of `|ψ_j|` from a log-linear fit over the outer quarter, read
/// from the heavier edge. Infinite if the profile does not decay.
fn localization_length(weights: &[f64], from_left: bool) -> f64 {
    let l = weights.len();
    let n = (l / 4).max(2).min(l);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|d| {
            let j = if from_left { d } else { l - 1 - d };
            (d as f64, 0.5 * weights[j].max(1e-300).ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if slope < 0.0 {
        -1.0 / slope
    } else {
        f64::INFINITY
    }
}

/// Real quasienergies near 0 or π whose eigenvectors sit on the outer sites.
pub fn edge_modes_from_transfer(tm: &TransferMatrix, report: &SpectrumReport, opts: &EdgeOptions) -> Vec<EdgeModeRecord> {
    let tol_real = opts.tol_real.unwrap_or(opts.tol_edge);
    let mut out = Vec::new();
    for (i, &e) in report.quasienergies.iter().enumerate() {
        if e.im.abs() >= tol_real {
            continue;
        }
        let kind = if fold(e).norm() < opts.tol_edge {
            EdgeKind::Zero
        } else if fold(e - c(PI, 0.0)).norm() < opts.tol_edge {
            EdgeKind::Pi
        } else {
            continue;
        };
        let w = site_weights(tm.right_eigenvectors.column(i));
        let l = w.len();
        let ne = ((opts.edge_fraction * l as f64).ceil() as usize).clamp(1, l);
        let left_weight: f64 = w[..ne].iter().sum();
        let right_weight: f64 = w[l - ne..].iter().sum();
        if left_weight + right_weight <= opts.min_edge_weight {
            continue;
        }
        out.push(EdgeModeRecord {
            kind,
            energy: e,
            localization_length: localization_length(&w, left_weight >= right_weight),
            left_weight,
            right_weight,
        });
    }
    out
}

/// Open-chain spectrum with its edge-mode census.
pub fn detect_edge_modes(p: &ModelParams, lat: &LatticeSpec, opts: &EdgeOptions) -> Result<EdgeScan> {
    if lat.bc != BoundaryCondition::Open {
        return invalid("edge-mode detection needs an open chain");
    }
    if lat.sites < 8 {
        return invalid(format!("edge-mode detection needs L >= 8, got {}", lat.sites));
    }
    let tm = TransferMatrix::for_params(p, lat)?;
    let mut report = quasienergies_from_transfer(&tm, lat.bc, None);
    report.edge_modes = edge_modes_from_transfer(&tm, &report, opts);
    let a = 0.5 * (reduced_alpha(p.alpha_j) + reduced_alpha(p.alpha_h));
    Ok(EdgeScan { report, near_quarter_warning: (a - FRAC_PI_4).abs() < 0.1 * FRAC_PI_4 })
}

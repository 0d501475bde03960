use serde::{Deserialize, Serialize};

use super::edge::{detect_edge_modes, EdgeKind, EdgeOptions};
use super::transfer::{quasienergies_from_transfer, SpectrumReport, TransferMatrix};
use crate::error::Result;
use crate::model::{BoundaryCondition, LatticeSpec, ModelParams, PhaseLabel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseThresholds {
    /// Real-mode density at or above which the point is volume-law critical.
    pub volume_density: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        PhaseThresholds { volume_density: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagnostics {
    pub label: PhaseLabel,
    pub pbc_real_modes: usize,
    pub pbc_density: f64,
    pub zero_pairs: usize,
    pub pi_pairs: usize,
    pub note: String,
}

fn pairs(obc: &SpectrumReport, kind: EdgeKind) -> usize {
    obc.edge_modes.iter().filter(|r| r.kind == kind).count().div_ceil(2)
}

/// Phase from an open-chain edge census and a periodic real-mode census.
pub fn classify_phase_from_spectrum(obc: &SpectrumReport, pbc: &SpectrumReport, th: &PhaseThresholds) -> PhaseDiagnostics {
    let zero_pairs = pairs(obc, EdgeKind::Zero);
    let pi_pairs = pairs(obc, EdgeKind::Pi);
    let pbc_density = pbc.real_density();
    let pbc_real_modes = pbc.n_real_modes;
    let has_edges = zero_pairs + pi_pairs > 0;
    let (label, note) = if pbc_density >= th.volume_density {
        (PhaseLabel::CriticalVolume, format!("real-mode density {pbc_density:.3}"))
    } else if pbc_real_modes > 0 && !has_edges {
        (PhaseLabel::CriticalLog, format!("{pbc_real_modes} isolated real bulk modes"))
    } else if pbc_real_modes > 0 {
        (PhaseLabel::Ambiguous, format!("{pbc_real_modes} real bulk modes alongside edge modes"))
    } else {
        let label = match (zero_pairs > 0, pi_pairs > 0) {
            (false, false) => PhaseLabel::Trivial,
            (true, false) => PhaseLabel::ZeroMode,
            (false, true) => PhaseLabel::PiMode,
            (true, true) => PhaseLabel::ZeroPi,
        };
        (label, String::new())
    };
    PhaseDiagnostics { label, pbc_real_modes, pbc_density, zero_pairs, pi_pairs, note }
}

/// Builds both spectra for `L` sites and classifies. The periodic census uses
/// periodic fermions, whose momenta include 0 and π.
pub fn classify_params(p: &ModelParams, sites: usize, edge: &EdgeOptions, th: &PhaseThresholds) -> Result<PhaseDiagnostics> {
    let obc = detect_edge_modes(p, &LatticeSpec::new(sites, BoundaryCondition::Open)?, edge)?;
    let pbc_lat = LatticeSpec::new(sites, BoundaryCondition::PeriodicOdd)?;
    let tm = TransferMatrix::for_params(p, &pbc_lat)?;
    let pbc = quasienergies_from_transfer(&tm, pbc_lat.bc, None);
    Ok(classify_phase_from_spectrum(&obc.report, &pbc, th))
}

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::dispersion::fold;
use super::edge::EdgeModeRecord;
use super::kicks::{FloquetKicks, QuadraticForm};
use crate::error::{invalid, Result};
use crate::linalg::{cond2, eig, C64};
use crate::model::{BoundaryCondition, LatticeSpec, ModelParams, PhaseLabel};

/// Eigenvector condition number above which `M` is treated as defective.
pub const DIAGONALIZABLE_COND_LIMIT: f64 = 1e10;

/// Quasienergy normalization: `ε = s · i · Log μ`. Pinned by the momentum
/// calibration test; the spectrum is symmetric under `ε → -ε`, so only `|s| = 1`
/// is observable there.
pub const QUASIENERGY_SCALE: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub m: Array2<C64>,
    pub eigenvalues: Array1<C64>,
    pub right_eigenvectors: Array2<C64>,
    pub diagonalizable: bool,
    pub condition_estimate: f64,
}

impl TransferMatrix {
    pub fn from_matrix(m: Array2<C64>) -> Result<Self> {
        let (eigenvalues, right_eigenvectors) = eig(&m)?;
        let condition_estimate = cond2(&right_eigenvectors)?;
        Ok(TransferMatrix {
            m,
            eigenvalues,
            right_eigenvectors,
            diagonalizable: condition_estimate <= DIAGONALIZABLE_COND_LIMIT,
            condition_estimate,
        })
    }

    pub fn for_params(p: &ModelParams, lat: &LatticeSpec) -> Result<Self> {
        Self::from_matrix(FloquetKicks::new(p, lat).transfer_dense())
    }

    pub fn quasienergies(&self) -> Vec<C64> {
        self.eigenvalues.iter().map(|&mu| quasienergy(mu)).collect()
    }
}

/// `M = exp(4W') exp(4W'')` with its eigendecomposition. When the eigenvector
/// matrix is ill-conditioned the eigenvalues are still the Schur values LAPACK
/// computed on the way; `diagonalizable` is cleared.
pub fn build_transfer_matrix(w_bond: &QuadraticForm, w_field: &QuadraticForm) -> Result<TransferMatrix> {
    if w_bond.modes() != w_field.modes() {
        return invalid("kick forms have different sizes");
    }
    TransferMatrix::from_matrix(w_bond.exp4()?.dot(&w_field.exp4()?))
}

/// `ε = i Log μ`, real part folded into (-π, π].
pub fn quasienergy(mu: C64) -> C64 {
    fold(C64::i() * mu.ln() * QUASIENERGY_SCALE)
}

/// Distance between quasienergies with the real part taken on the circle.
pub fn qe_distance(a: C64, b: C64) -> f64 {
    fold(a - b).norm()
}

/// Default `tol_real`: 1e-8 times the largest quasienergy modulus (at least 1).
pub fn default_tol_real(eps: &[C64]) -> f64 {
    1e-8 * eps.iter().fold(1.0f64, |m, e| m.max(e.norm()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub quasienergies: Vec<C64>,
    pub n_real_modes: usize,
    pub tol_real: f64,
    pub edge_modes: Vec<EdgeModeRecord>,
    pub phase_label: Option<PhaseLabel>,
    pub boundary_condition: BoundaryCondition,
    pub diagonalizable: bool,
    pub condition_estimate: f64,
}

impl SpectrumReport {
    pub fn is_real(&self, e: C64) -> bool {
        e.im.abs() < self.tol_real
    }

    pub fn real_density(&self) -> f64 {
        self.n_real_modes as f64 / self.quasienergies.len() as f64
    }
}

pub fn quasienergies_from_transfer(tm: &TransferMatrix, bc: BoundaryCondition, tol_real: Option<f64>) -> SpectrumReport {
    let quasienergies = tm.quasienergies();
    let tol_real = tol_real.unwrap_or_else(|| default_tol_real(&quasienergies));
    let n_real_modes = quasienergies.iter().filter(|e| e.im.abs() < tol_real).count();
    SpectrumReport {
        quasienergies,
        n_real_modes,
        tol_real,
        edge_modes: Vec::new(),
        phase_label: None,
        boundary_condition: bc,
        diagonalizable: tm.diagonalizable,
        condition_estimate: tm.condition_estimate,
    }
}

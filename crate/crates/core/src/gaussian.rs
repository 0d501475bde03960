//! Pure fermionic Gaussian states as isotropic 2L×L frames.
//!
//! Columns of `phi` hold annihilator coefficients in the Majorana basis:
//! `b_k = Σ_m phi[m,k] a_m` with `b_k |ψ⟩ = 0`. A quadratic kick `e^{Σ a W a}`
//! maps them to `e^{4W} phi`, so one period acts as `phi ← M phi` with the
//! transfer matrix `M = e^{4W'} e^{4W''}`.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::entanglement::entropy_from_cprime;
use crate::error::{Error, Result};
use crate::linalg::{c, eig, max_abs, thin_qr, C64};
use crate::model::{Basis, LatticeSpec, ModelParams, QuenchConfig, SubsystemSpec};
use crate::spectral::{FloquetKicks, TransferMatrix};

/// Which matrix carries annihilator frames across a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameOrientation {
    /// `phi ← M phi`.
    Direct,
    /// `phi ← M^{-T} phi`.
    InverseTranspose,
}

/// Pinned against the state-vector oracle in `tests/oracle_equivalence.rs`.
pub const FRAME_ORIENTATION: FrameOrientation = FrameOrientation::Direct;

/// Smallest `|R_ii| / max |R_jj|` accepted by the re-orthonormalization.
pub const RANK_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFrame {
    pub phi: Array2<C64>,
    pub period_count: usize,
    /// `ln ‖ψ‖` accumulated over the renormalizations.
    pub norm_log: f64,
}

fn site_column(sign: i8) -> [C64; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    if sign >= 0 {
        [c(r, 0.0), c(0.0, -r)]
    } else {
        [c(r, 0.0), c(0.0, r)]
    }
}

impl GaussianFrame {
    /// Product state with `Z_j = signs[j]`.
    pub fn from_z_signs(signs: &[i8]) -> Self {
        let l = signs.len();
        let mut phi = Array2::zeros((2 * l, l));
        for (j, &sg) in signs.iter().enumerate() {
            let [u, v] = site_column(sg);
            phi[[2 * j, j]] = u;
            phi[[2 * j + 1, j]] = v;
        }
        GaussianFrame { phi, period_count: 0, norm_log: 0.0 }
    }

    pub fn vacuum(sites: usize) -> Self {
        Self::from_z_signs(&vec![1; sites])
    }

    /// Orthonormalizes an arbitrary spanning set of an isotropic subspace.
    pub fn from_columns(phi: Array2<C64>) -> Result<Self> {
        if phi.nrows() != 2 * phi.ncols() {
            return crate::error::invalid(format!("frame must be 2L×L, got {:?}", phi.dim()));
        }
        let mut f = GaussianFrame { phi, period_count: 0, norm_log: 0.0 };
        f.orthonormalize()?;
        f.norm_log = 0.0;
        Ok(f)
    }

    pub fn sites(&self) -> usize {
        self.phi.ncols()
    }

    /// `max |phiᵀ phi|`.
    pub fn isotropy_residual(&self) -> f64 {
        max_abs(self.phi.t().dot(&self.phi).view())
    }

    /// `max |phi† phi - 1|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.phi.t().mapv(|z| z.conj()).dot(&self.phi);
        max_abs((&g - &Array2::<C64>::eye(self.sites())).view())
    }

    /// Thin QR plus a first-order isotropy correction; returns `Σ ln |R_ii|`.
    fn orthonormalize(&mut self) -> Result<f64> {
        let period = self.period_count;
        let qr = |a: &Array2<C64>| -> Result<(Array2<C64>, f64)> {
            let (q, r) = thin_qr(a)?;
            let d: Vec<f64> = r.diag().iter().map(|z| z.norm()).collect();
            let hi = d.iter().cloned().fold(0.0, f64::max);
            let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
            if !(hi.is_finite() && hi > 0.0) || lo < RANK_TOL * hi {
                return Err(Error::DegenerateEvolution { period });
            }
            Ok((q, d.iter().map(|x| x.ln()).sum()))
        };
        let (q, logdet) = qr(&self.phi)?;
        let e = q.t().dot(&q);
        let fixed = &q - &(q.mapv(|z| z.conj()).dot(&e) * c(0.5, 0.0));
        let (q, _) = qr(&fixed)?;
        self.phi = q;
        Ok(logdet)
    }

    /// Applies a row map (`phi ← A phi`) and renormalizes.
    pub fn apply_map(&mut self, f: impl FnOnce(ndarray::ArrayViewMut2<C64>)) -> Result<()> {
        f(self.phi.view_mut());
        self.period_count += 1;
        let logdet = self.orthonormalize()?;
        self.norm_log += 0.5 * logdet;
        Ok(())
    }

    /// One drive period from the factored kicks.
    pub fn step(&mut self, kicks: &FloquetKicks) -> Result<()> {
        self.apply_map(|v| kicks.apply(v))
    }

    pub fn correlations(&self) -> CorrelationMatrix {
        CorrelationMatrix::from_cmatrix(self.phi.mapv(|z| z.conj() * 2.0).dot(&self.phi.t()))
    }

    /// `C'` restricted to the Majorana pairs of the given 0-based sites.
    pub fn cprime_block(&self, sites: &[usize]) -> Array2<C64> {
        let rows: Vec<usize> = sites.iter().flat_map(|&j| [2 * j, 2 * j + 1]).collect();
        let sub = self.phi.select(Axis(0), &rows);
        let mut cp = sub.mapv(|z| z.conj() * 2.0).dot(&sub.t());
        for i in 0..rows.len() {
            cp[[i, i]] -= 1.0;
        }
        cp
    }
}

/// Initial frame for a Z-basis product state.
pub fn initial_frame(q: &QuenchConfig, lat: &LatticeSpec) -> Result<GaussianFrame> {
    let (basis, signs) = q.initial.product_signs(lat.sites)?;
    if basis != Basis::Z {
        return Err(Error::Unsupported(
            "X-basis product states are not Gaussian in the Jordan-Wigner fermions".into(),
        ));
    }
    Ok(GaussianFrame::from_z_signs(&signs))
}

/// One period through a dense transfer matrix.
pub fn period_map(frame: &GaussianFrame, tm: &TransferMatrix) -> Result<GaussianFrame> {
    let m = match FRAME_ORIENTATION {
        FrameOrientation::Direct => tm.m.clone(),
        FrameOrientation::InverseTranspose => crate::linalg::inv(&tm.m)?.t().to_owned(),
    };
    let mut out = frame.clone();
    out.apply_map(|mut v| {
        let next = m.dot(&v);
        v.assign(&next);
    })?;
    Ok(out)
}

/// Long-time frame: the span of the eigenvectors of `M` with the `L` largest
/// `|μ|`. Meaningful when `|μ| ≠ 1` for every mode, so the split is unambiguous.
pub fn steady_state_frame(tm: &TransferMatrix) -> Result<GaussianFrame> {
    let n = tm.m.nrows();
    let l = n / 2;
    let (mu, v) = eig(&tm.m)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mu[b].norm().total_cmp(&mu[a].norm()).then(a.cmp(&b)));
    let gap = mu[order[l - 1]].norm() / mu[order[l]].norm();
    if gap < 1.0 + 1e-9 {
        return Err(Error::NumericalBreakdown {
            reason: "no gap between growing and decaying modes".into(),
            condition: gap,
        });
    }
    let cols = v.select(Axis(1), &order[..l]);
    GaussianFrame::from_columns(cols)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    /// `C_ij = ⟨a_i a_j⟩`.
    pub c: Array2<C64>,
    pub cprime: Array2<C64>,
}

impl CorrelationMatrix {
    pub fn from_cmatrix(c: Array2<C64>) -> Self {
        let mut cprime = c.clone();
        cprime.diag_mut().mapv_inplace(|z| z - 1.0);
        CorrelationMatrix { c, cprime }
    }

    pub fn sites(&self) -> usize {
        self.c.nrows() / 2
    }

    /// `⟨Z_j⟩ = i C_{2j,2j+1}` (0-based).
    pub fn z_expect(&self, j: usize) -> f64 {
        (C64::i() * self.c[[2 * j, 2 * j + 1]]).re
    }

    /// `⟨X_j X_{j+1}⟩ = i C_{2j+1,2j+2}` (0-based, open bonds).
    pub fn xx_expect(&self, j: usize) -> f64 {
        (C64::i() * self.c[[2 * j + 1, 2 * j + 2]]).re
    }

    /// `max |C'² - 1|`.
    pub fn purity_residual(&self) -> f64 {
        let sq = self.cprime.dot(&self.cprime);
        max_abs((&sq - &Array2::<C64>::eye(self.c.nrows())).view())
    }

    /// `max |C + Cᵀ - 2|`.
    pub fn anticommutation_residual(&self) -> f64 {
        let s = &self.c + &self.c.t();
        max_abs((&s - &(Array2::<C64>::eye(self.c.nrows()) * c(2.0, 0.0))).view())
    }

    pub fn block(&self, sites: &[usize]) -> Array2<C64> {
        let rows: Vec<usize> = sites.iter().flat_map(|&j| [2 * j, 2 * j + 1]).collect();
        self.cprime.select(Axis(0), &rows).select(Axis(1), &rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub period: usize,
    pub s_a: f64,
    pub norm_log: f64,
    /// Frame residual `max(|phi†phi - 1|, |phiᵀphi|)`, which bounds `|C'² - 1|`.
    pub purity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    /// Row 0 is the initial state.
    pub rows: Vec<TraceRow>,
}

impl EntropyTrace {
    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has the initial row")
    }

    pub fn entropies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.s_a).collect()
    }
}

fn row(frame: &GaussianFrame, sites: &[usize]) -> Result<TraceRow> {
    Ok(TraceRow {
        period: frame.period_count,
        s_a: entropy_from_cprime(&frame.cprime_block(sites))?.0,
        norm_log: frame.norm_log,
        purity_residual: frame.orthonormality_residual().max(frame.isotropy_residual()),
    })
}

/// Per-period subsystem entropy. `observe` sees the frame after every period.
pub fn stroboscopic_run_with(
    p: &ModelParams,
    lat: &LatticeSpec,
    q: &QuenchConfig,
    sub: &SubsystemSpec,
    mut observe: impl FnMut(&GaussianFrame) -> Result<()>,
) -> Result<EntropyTrace> {
    if q.k_field != 0.0 {
        return Err(Error::Unsupported("the longitudinal field breaks the free-fermion structure".into()));
    }
    let sites = sub.site_indices(lat)?;
    let kicks = FloquetKicks::new(p, lat);
    let mut frame = initial_frame(q, lat)?;
    observe(&frame)?;
    let mut rows = vec![row(&frame, &sites)?];
    for _ in 0..q.n_periods {
        frame.step(&kicks)?;
        observe(&frame)?;
        rows.push(row(&frame, &sites)?);
    }
    Ok(EntropyTrace { rows })
}

pub fn stroboscopic_run(p: &ModelParams, lat: &LatticeSpec, q: &QuenchConfig, sub: &SubsystemSpec) -> Result<EntropyTrace> {
    stroboscopic_run_with(p, lat, q, sub, |_| Ok(()))
}

/// Evolves until the subsystem entropies of successive periods (and period-2
/// pairs) agree to `tol` for `checks` periods, or `max_periods` elapse.
pub fn evolve_to_steady_state(
    p: &ModelParams,
    lat: &LatticeSpec,
    q: &QuenchConfig,
    probe: &[usize],
    tol: f64,
    checks: usize,
    max_periods: usize,
) -> Result<(GaussianFrame, bool)> {
    let kicks = FloquetKicks::new(p, lat);
    let mut frame = initial_frame(q, lat)?;
    let mut hist: Vec<f64> = Vec::new();
    let mut run = 0;
    for _ in 0..max_periods {
        frame.step(&kicks)?;
        let s = entropy_from_cprime(&frame.cprime_block(probe))?.0;
        hist.push(s);
        let n = hist.len();
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(1.0);
        if n >= 3 && (close(hist[n - 1], hist[n - 2]) || close(hist[n - 1], hist[n - 3])) {
            run += 1;
            if run >= checks {
                return Ok((frame, true));
            }
        } else {
            run = 0;
        }
    }
    Ok((frame, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundaryCondition, InitialState, Units};

    #[test]
    fn vacuum_and_neel_expectations() {
        let v = GaussianFrame::vacuum(4).correlations();
        assert!((0..4).all(|j| (v.z_expect(j) - 1.0).abs() < 1e-15));
        let lat = LatticeSpec::new(6, BoundaryCondition::Open).unwrap();
        let n = initial_frame(&QuenchConfig::new(InitialState::NeelFermion, 1), &lat).unwrap().correlations();
        assert!((0..6).all(|j| (n.z_expect(j) - if j % 2 == 0 { -1.0 } else { 1.0 }).abs() < 1e-15));
        assert!(n.purity_residual() < 1e-15);
        assert!(n.anticommutation_residual() < 1e-15);
    }

    #[test]
    fn all_down_is_sitewise_flip() {
        let up = GaussianFrame::vacuum(3);
        let down = GaussianFrame::from_z_signs(&[-1, -1, -1]);
        assert_eq!(down.phi, up.phi.mapv(|z| z.conj()));
    }

    #[test]
    fn x_basis_is_unsupported() {
        let lat = LatticeSpec::new(4, BoundaryCondition::Open).unwrap();
        let q = QuenchConfig::new(InitialState::AllUp(Basis::X), 1);
        assert!(matches!(initial_frame(&q, &lat), Err(Error::Unsupported(_))));
    }

    #[test]
    fn identity_map_keeps_correlations() {
        let f = GaussianFrame::from_z_signs(&[1, -1, -1, 1]);
        let tm = TransferMatrix::from_matrix(Array2::eye(8)).unwrap();
        let g = period_map(&f, &tm).unwrap();
        assert!(max_abs((&g.correlations().c - &f.correlations().c).view()) < 1e-15);
        assert!(g.norm_log.abs() < 1e-15);
    }

    #[test]
    fn imaginary_field_polarizes_down() {
        let p = ModelParams::new(0.1, 0.0, 0.0, 2.0, Units::Pi4).unwrap();
        let lat = LatticeSpec::new(4, BoundaryCondition::Open).unwrap();
        let kicks = FloquetKicks::new(&p, &lat);
        let mut f = GaussianFrame::from_z_signs(&[1, -1, 1, -1]);
        for _ in 0..40 {
            f.step(&kicks).unwrap();
        }
        let c = f.correlations();
        assert!((0..4).all(|j| c.z_expect(j) < -0.95), "{:?}", (0..4).map(|j| c.z_expect(j)).collect::<Vec<_>>());
    }

    #[test]
    fn invariants_under_strong_drive() {
        let p = ModelParams::on_plane(0.7, -1.5, 1.4, Units::Pi4).unwrap();
        let lat = LatticeSpec::new(24, BoundaryCondition::PeriodicEven).unwrap();
        let kicks = FloquetKicks::new(&p, &lat);
        let mut f = GaussianFrame::from_z_signs(&[1, -1].repeat(12));
        for _ in 0..200 {
            f.step(&kicks).unwrap();
            assert!(f.isotropy_residual() < 1e-10);
            assert!(f.orthonormality_residual() < 1e-10);
        }
        assert!(f.correlations().purity_residual() < 1e-8);
    }

    #[test]
    fn unitary_norm_log_stays_zero() {
        let p = ModelParams::on_plane(0.6, 0.0, 0.0, Units::Pi4).unwrap();
        let lat = LatticeSpec::new(10, BoundaryCondition::Open).unwrap();
        let q = QuenchConfig::new(InitialState::NeelFermion, 30);
        let t = stroboscopic_run(&p, &lat, &q, &SubsystemSpec::new(1, 5)).unwrap();
        assert!(t.rows.iter().all(|r| r.norm_log.abs() < 1e-10));
    }

    #[test]
    fn steady_frame_matches_long_evolution() {
        let p = ModelParams::on_plane(0.5, -1.0, 0.5, Units::Pi4).unwrap();
        let lat = LatticeSpec::new(12, BoundaryCondition::PeriodicEven).unwrap();
        let tm = TransferMatrix::for_params(&p, &lat).unwrap();
        let ss = steady_state_frame(&tm).unwrap();
        let kicks = FloquetKicks::new(&p, &lat);
        let mut f = GaussianFrame::from_z_signs(&[1, -1].repeat(6));
        for _ in 0..400 {
            f.step(&kicks).unwrap();
        }
        assert!(max_abs((&ss.correlations().c - &f.correlations().c).view()) < 1e-8);
    }

    #[test]
    fn k_field_is_rejected() {
        let p = ModelParams::on_plane(0.5, -1.0, 0.5, Units::Pi4).unwrap();
        let lat = LatticeSpec::new(8, BoundaryCondition::Open).unwrap();
        let q = QuenchConfig::new(InitialState::NeelFermion, 2).with_k(0.1);
        assert!(matches!(stroboscopic_run(&p, &lat, &q, &SubsystemSpec::new(1, 2)), Err(Error::Unsupported(_))));
    }
}

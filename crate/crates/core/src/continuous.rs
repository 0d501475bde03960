//! Continuous-time limit `U(t) = exp(t (i J Σ X X + i h Σ Z))`.
//!
//! Two routes: the correlation-matrix ODE integrated with an adaptive
//! Dormand–Prince 5(4) scheme, and exact frame propagation through `expm`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::entanglement::entropy_from_cprime;
use crate::error::{invalid, Error, Result};
use crate::gaussian::{initial_frame, CorrelationMatrix, GaussianFrame};
use crate::linalg::{expm, C64};
use crate::model::{LatticeSpec, ModelParams, QuenchConfig, SubsystemSpec};
use crate::spectral::{build_kick_forms, QuadraticForm};

/// Generator `W_c = W' + W''` of the continuous evolution, per unit time.
pub fn continuous_form(p: &ModelParams, lat: &LatticeSpec) -> QuadraticForm {
    let (wb, wf) = build_kick_forms(p, lat);
    QuadraticForm { w: &wb.w + &wf.w }
}

/// `dC/dt = i(-Cᵀ H̄ᵀ C + Cᵀ H̄ C + C H Cᵀ - C Hᵀ Cᵀ)` with `H = i W`.
pub fn correlation_rhs(c: &Array2<C64>, h: &Array2<C64>) -> Array2<C64> {
    let ct = c.t();
    let hb = h.mapv(|z| z.conj());
    let r = ct.dot(&hb).dot(c) - ct.dot(&hb.t()).dot(c) + c.dot(h).dot(&ct) - c.dot(&h.t()).dot(&ct);
    r.mapv(|z| z * C64::i())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dp45Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dp45Options {
    fn default() -> Self {
        Dp45Options { rtol: 1e-9, atol: 1e-11, h_init: 1e-3, h_min: 1e-12, max_steps: 1_000_000 }
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive Dormand–Prince integration of the autonomous `y' = f(y)` through every time in
/// `t_grid` (ascending, starting at the initial time).
pub fn integrate_dp45(
    y0: &Array2<C64>,
    t_grid: &[f64],
    opts: &Dp45Options,
    f: impl Fn(&Array2<C64>) -> Array2<C64>,
) -> Result<Vec<Array2<C64>>> {
    if t_grid.is_empty() {
        return Ok(Vec::new());
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return invalid("time grid must be ascending");
    }
    let mut t = t_grid[0];
    let mut y = y0.clone();
    let mut out = vec![y.clone()];
    let mut h = opts.h_init;
    let mut k1 = f(&y);
    let mut steps = 0usize;
    for &target in &t_grid[1..] {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::IntegrationFailure { last_good_t: t, reason: "step budget exhausted".into() });
            }
            steps += 1;
            let hs = h.min(target - t);
            let mut ks = vec![k1.clone()];
            for row in &A {
                let mut yi = y.clone();
                for (j, kj) in ks.iter().enumerate() {
                    if row[j] != 0.0 {
                        yi.scaled_add(C64::new(hs * row[j], 0.0), kj);
                    }
                }
                ks.push(f(&yi));
            }
            let mut y5 = y.clone();
            let mut err = Array2::<C64>::zeros(y.dim());
            for (i, k) in ks.iter().enumerate().take(6) {
                y5.scaled_add(C64::new(hs * B5[i], 0.0), k);
            }
            for (i, k) in ks.iter().enumerate() {
                err.scaled_add(C64::new(hs * (B5[i] - B4[i]), 0.0), k);
            }
            let mut e = 0.0f64;
            for ((ev, a), b) in err.iter().zip(y.iter()).zip(y5.iter()) {
                let sc = opts.atol + opts.rtol * a.norm().max(b.norm());
                e = e.max(ev.norm() / sc);
            }
            if !e.is_finite() {
                return Err(Error::IntegrationFailure { last_good_t: t, reason: "non-finite derivative".into() });
            }
            if e <= 1.0 {
                t += hs;
                y = y5;
                k1 = ks.swap_remove(6);
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h = hs * factor;
            if h < opts.h_min {
                return Err(Error::IntegrationFailure {
                    last_good_t: t,
                    reason: format!("step size {h:.3e} below minimum"),
                });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Integrates the correlation-matrix ODE and checks the invariants at each
/// output time.
pub fn evolve_continuous(
    c0: &CorrelationMatrix,
    form: &QuadraticForm,
    t_grid: &[f64],
    opts: &Dp45Options,
) -> Result<Vec<CorrelationMatrix>> {
    if c0.c.dim() != form.w.dim() {
        return invalid("correlation matrix and generator sizes differ");
    }
    let h = form.hamiltonian();
    let ys = integrate_dp45(&c0.c, t_grid, opts, |c| correlation_rhs(c, &h))?;
    let mut out = Vec::with_capacity(ys.len());
    for (y, &t) in ys.into_iter().zip(t_grid) {
        let cm = CorrelationMatrix::from_cmatrix(y);
        let drift = cm.purity_residual().max(cm.anticommutation_residual());
        if !(drift < 1e-6) {
            return Err(Error::IntegrationFailure { last_good_t: t, reason: format!("invariant drift {drift:.3e}") });
        }
        out.push(cm);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousPoint {
    pub t: f64,
    pub s_a: f64,
}

/// Entropy at the grid times by exact frame propagation `phi(t) = e^{4 W_c t} phi(0)`.
pub fn continuous_entropy_trace(
    p: &ModelParams,
    lat: &LatticeSpec,
    q: &QuenchConfig,
    sub: &SubsystemSpec,
    t_grid: &[f64],
) -> Result<Vec<ContinuousPoint>> {
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) || t_grid.first().is_some_and(|&t| t < 0.0) {
        return invalid("time grid must be ascending and nonnegative");
    }
    let a = continuous_form(p, lat).w.mapv(|z| z * 4.0);
    let sites = sub.site_indices(lat)?;
    let mut frame: GaussianFrame = initial_frame(q, lat)?;
    let mut t = 0.0;
    let mut cached: Option<(f64, Array2<C64>)> = None;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let dt = target - t;
        if dt > 0.0 {
            let prop = match &cached {
                Some((d, m)) if (d - dt).abs() <= 1e-14 * dt.max(1.0) => m.clone(),
                _ => {
                    let m = expm(&a.mapv(|z| z * dt))?;
                    cached = Some((dt, m.clone()));
                    m
                }
            };
            frame.apply_map(|mut v| {
                let next = prop.dot(&v);
                v.assign(&next);
            })?;
            t = target;
        }
        out.push(ContinuousPoint { t: target, s_a: entropy_from_cprime(&frame.cprime_block(&sites))?.0 });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::model::{BoundaryCondition, InitialState, Units};

    #[test]
    fn zero_generator_keeps_state() {
        let c0 = GaussianFrame::from_z_signs(&[1, -1, 1]).correlations();
        let out = evolve_continuous(&c0, &QuadraticForm::zeros(6), &[0.0, 1.0, 2.0], &Dp45Options::default()).unwrap();
        assert!(out.iter().all(|c| max_abs((&c.c - &c0.c).view()) < 1e-15));
    }

    #[test]
    fn ode_matches_frame_propagation() {
        let p = ModelParams::new(0.3, -0.2, 0.5, 0.25, Units::Radians).unwrap();
        let lat = LatticeSpec::new(6, BoundaryCondition::Open).unwrap();
        let form = continuous_form(&p, &lat);
        let f0 = GaussianFrame::from_z_signs(&[1, -1, 1, 1, -1, 1]);
        let grid = [0.0, 0.5, 1.0, 2.5];
        let out = evolve_continuous(&f0.correlations(), &form, &grid, &Dp45Options::default()).unwrap();
        for (cm, &t) in out.iter().zip(&grid) {
            let m = expm(&form.w.mapv(|z| z * 4.0 * t)).unwrap();
            let f = GaussianFrame::from_columns(m.dot(&f0.phi)).unwrap();
            assert!(max_abs((&cm.c - &f.correlations().c).view()) < 1e-7);
        }
    }

    #[test]
    fn hermitian_generator_conserves_trace_and_purity() {
        let p = ModelParams::new(0.4, 0.0, 0.7, 0.0, Units::Radians).unwrap();
        let lat = LatticeSpec::new(5, BoundaryCondition::Open).unwrap();
        let c0 = GaussianFrame::from_z_signs(&[1, -1, -1, 1, 1]).correlations();
        let out = evolve_continuous(&c0, &continuous_form(&p, &lat), &[0.0, 0.3, 0.6], &Dp45Options::default()).unwrap();
        for cm in &out {
            assert!((cm.c.diag().sum() - c0.c.diag().sum()).norm() < 1e-9);
            assert!(cm.purity_residual() < 1e-8);
        }
    }

    #[test]
    fn step_floor_reports_last_time() {
        let y0 = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        let r = integrate_dp45(&y0, &[0.0, 2.0], &Dp45Options::default(), |y| y.mapv(|z| z * z * 50.0));
        match r {
            Err(Error::IntegrationFailure { last_good_t, .. }) => assert!(last_good_t > 0.019 && last_good_t < 0.02, "{last_good_t}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dp45_exponential() {
        let y0 = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        let out = integrate_dp45(&y0, &[0.0, 1.0, 3.0], &Dp45Options::default(), |y| y.mapv(|z| z * C64::new(-0.5, 2.0))).unwrap();
        let want = (C64::new(-0.5, 2.0) * 3.0).exp();
        assert!((out[2][[0, 0]] - want).norm() < 1e-8);
    }

    #[test]
    fn frame_route_unitary_entropy_grows() {
        let p = ModelParams::on_plane(0.5, 0.0, 0.0, Units::Radians).unwrap();
        let lat = LatticeSpec::new(20, BoundaryCondition::Open).unwrap();
        let q = QuenchConfig::new(InitialState::AllUp(crate::model::Basis::Z), 0);
        let grid: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let tr = continuous_entropy_trace(&p, &lat, &q, &SubsystemSpec::new(1, 10), &grid).unwrap();
        assert!(tr[0].s_a.abs() < 1e-10);
        assert!(tr[5].s_a > tr[1].s_a);
    }
}

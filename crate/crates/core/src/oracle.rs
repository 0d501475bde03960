//! Dense state-vector simulator in the spin language.
//!
//! Basis index bit `j` is site `j+1`; a clear bit is spin up (`Z = +1`).

use ndarray::Array2;
use ndarray_linalg::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{c, C64};
use crate::model::{Basis, LatticeSpec, ModelParams, QuenchConfig, SubsystemSpec};

pub const MAX_SITES: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub amplitudes: Vec<C64>,
    pub sites: usize,
}

fn check_capacity(sites: usize) -> Result<()> {
    if sites > MAX_SITES {
        return Err(Error::Capacity { what: format!("state vector for {sites} spins"), limit: MAX_SITES });
    }
    Ok(())
}

impl SpinState {
    pub fn product(basis: Basis, signs: &[i8]) -> Result<Self> {
        let sites = signs.len();
        check_capacity(sites)?;
        let dim = 1usize << sites;
        let amplitudes = match basis {
            Basis::Z => {
                let idx = signs.iter().enumerate().fold(0usize, |acc, (j, &s)| if s < 0 { acc | (1 << j) } else { acc });
                let mut v = vec![c(0.0, 0.0); dim];
                v[idx] = c(1.0, 0.0);
                v
            }
            Basis::X => {
                let norm = (dim as f64).sqrt().recip();
                (0..dim)
                    .map(|s| {
                        let neg = signs.iter().enumerate().filter(|&(j, &sg)| sg < 0 && s >> j & 1 == 1).count();
                        c(if neg % 2 == 0 { norm } else { -norm }, 0.0)
                    })
                    .collect()
            }
        };
        Ok(SpinState { amplitudes, sites })
    }

    pub fn from_config(q: &QuenchConfig, sites: usize) -> Result<Self> {
        let (basis, signs) = q.initial.product_signs(sites)?;
        Self::product(basis, &signs)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Returns the norm before rescaling.
    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NumericalBreakdown { reason: "state vector norm vanished".into(), condition: n });
        }
        self.amplitudes.iter_mut().for_each(|z| *z /= n);
        Ok(n)
    }

    /// Ising symmetry `Π Z_j`, which reverses every `S_x`.
    pub fn flipped(&self) -> Self {
        let amplitudes =
            self.amplitudes.iter().enumerate().map(|(s, &a)| if s.count_ones() % 2 == 0 { a } else { -a }).collect();
        SpinState { amplitudes, sites: self.sites }
    }

    fn inner(&self, other: &[C64]) -> C64 {
        self.amplitudes.iter().zip(other).map(|(a, b)| a.conj() * b).sum()
    }

    fn z_sign(s: usize, j: usize) -> f64 {
        if s >> j & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `⟨X_i⟩`.
    pub fn x_expect(&self, i: usize) -> f64 {
        let flipped: Vec<C64> = (0..self.amplitudes.len()).map(|s| self.amplitudes[s ^ (1 << i)]).collect();
        self.inner(&flipped).re
    }

    /// `⟨X_i X_j⟩`.
    pub fn xx_expect(&self, i: usize, j: usize) -> f64 {
        let m = (1 << i) ^ (1 << j);
        let flipped: Vec<C64> = (0..self.amplitudes.len()).map(|s| self.amplitudes[s ^ m]).collect();
        self.inner(&flipped).re
    }

    /// `⟨Z_i⟩`.
    pub fn z_expect(&self, i: usize) -> f64 {
        self.amplitudes.iter().enumerate().map(|(s, a)| a.norm_sqr() * Self::z_sign(s, i)).sum()
    }

    /// `a_m |ψ⟩` for Majorana index `m` (0-based): `a_{2j} = (Π_{k<j} Z_k) X_j`,
    /// `a_{2j+1} = -(Π_{k<j} Z_k) Y_j`.
    pub fn apply_majorana(&self, m: usize) -> Vec<C64> {
        let j = m / 2;
        let below = (1usize << j) - 1;
        let mut out = vec![c(0.0, 0.0); self.amplitudes.len()];
        for (s, &a) in self.amplitudes.iter().enumerate() {
            let string = if (s & below).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let t = s ^ (1 << j);
            let coef = if m % 2 == 0 {
                c(string, 0.0)
            } else {
                c(0.0, -string * Self::z_sign(s, j))
            };
            out[t] += coef * a;
        }
        out
    }

    /// `C_mn = ⟨ψ| a_m a_n |ψ⟩` for a normalized state.
    pub fn majorana_correlations(&self) -> Array2<C64> {
        let n = 2 * self.sites;
        let applied: Vec<Vec<C64>> = (0..n).map(|m| self.apply_majorana(m)).collect();
        Array2::from_shape_fn((n, n), |(a, b)| applied[a].iter().zip(&applied[b]).map(|(x, y)| x.conj() * y).sum())
    }

    /// Schmidt weights across the cut `sites | rest` (0-based site indices).
    pub fn schmidt_weights(&self, sites: &[usize]) -> Result<Vec<f64>> {
        let rest: Vec<usize> = (0..self.sites).filter(|j| !sites.contains(j)).collect();
        let (na, nb) = (1usize << sites.len(), 1usize << rest.len());
        let mut m = Array2::<C64>::zeros((na, nb));
        for (s, &amp) in self.amplitudes.iter().enumerate() {
            let a = sites.iter().enumerate().fold(0, |acc, (k, &j)| acc | ((s >> j & 1) << k));
            let b = rest.iter().enumerate().fold(0, |acc, (k, &j)| acc | ((s >> j & 1) << k));
            m[[a, b]] = amp;
        }
        let (_, sv, _) = m.svd(false, false)?;
        let total: f64 = sv.iter().map(|x| x * x).sum();
        Ok(sv.iter().map(|x| x * x / total).collect())
    }
}

/// One drive period: field kick, Ising kick, then `exp(i K Σ X_j)` when `K ≠ 0`.
/// Returns the norm before renormalization.
pub fn apply_floquet_period(psi: &mut SpinState, p: &ModelParams, lat: &LatticeSpec, k_field: f64) -> Result<f64> {
    let l = psi.sites;
    if l != lat.sites {
        return invalid(format!("state has {l} spins, lattice {}", lat.sites));
    }
    check_capacity(l)?;
    let h = p.h();
    let phases: Vec<C64> = (0..=l).map(|down| (C64::i() * h * (l as f64 - 2.0 * down as f64)).exp()).collect();
    for (s, a) in psi.amplitudes.iter_mut().enumerate() {
        *a *= phases[s.count_ones() as usize];
    }
    let (cj, sj) = (p.j().cos(), C64::i() * p.j().sin());
    let mut bonds: Vec<(usize, usize)> = (0..l - 1).map(|j| (j, j + 1)).collect();
    if lat.bc.is_periodic() && l > 2 {
        bonds.push((l - 1, 0));
    }
    for (a, b) in bonds {
        pair_gate(&mut psi.amplitudes, (1 << a) | (1 << b), cj, sj);
    }
    if k_field != 0.0 {
        let (ck, sk) = (c(k_field.cos(), 0.0), c(0.0, k_field.sin()));
        for j in 0..l {
            pair_gate(&mut psi.amplitudes, 1 << j, ck, sk);
        }
    }
    psi.normalize()
}

/// `ψ ← cos·ψ + i sin·(flip mask)ψ`.
fn pair_gate(v: &mut [C64], mask: usize, cs: C64, isn: C64) {
    let low = mask.trailing_zeros();
    for s in 0..v.len() {
        if s >> low & 1 == 0 {
            let t = s ^ mask;
            let (x, y) = (v[s], v[t]);
            v[s] = cs * x + isn * y;
            v[t] = cs * y + isn * x;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableEntry {
    /// `⟨S_x^i⟩ = ⟨X_i⟩ / 2`.
    pub sx: Vec<f64>,
    /// `⟨S_x^1 S_x^L⟩`.
    pub sxsx_edge: f64,
    pub ghz_overlap: f64,
}

pub fn spin_observables(psi: &SpinState) -> ObservableEntry {
    let l = psi.sites;
    ObservableEntry {
        sx: (0..l).map(|i| 0.5 * psi.x_expect(i)).collect(),
        sxsx_edge: 0.25 * psi.xx_expect(0, l - 1),
        ghz_overlap: ghz_overlap(psi),
    }
}

/// `|⟨GHZ_x|ψ⟩|²` with `GHZ_x = (|→…→⟩ + |←…←⟩)/√2`.
pub fn ghz_overlap(psi: &SpinState) -> f64 {
    cat_overlaps(psi).0
}

/// Overlaps with the even and odd cats `(|→…→⟩ ± |←…←⟩)/√2`.
pub fn cat_overlaps(psi: &SpinState) -> (f64, f64) {
    let norm = ((1usize << psi.sites) as f64).sqrt().recip();
    let (mut plus, mut minus) = (c(0.0, 0.0), c(0.0, 0.0));
    for (s, &a) in psi.amplitudes.iter().enumerate() {
        plus += a;
        minus += if s.count_ones() % 2 == 0 { a } else { -a };
    }
    let scale = norm / 2f64.sqrt();
    (((plus + minus) * scale).norm_sqr(), ((plus - minus) * scale).norm_sqr())
}

/// Von Neumann entropy of a subsystem from the dense partial trace.
pub fn reduced_entropy_oracle(psi: &SpinState, sub: &SubsystemSpec, lat: &LatticeSpec) -> Result<f64> {
    let w = psi.schmidt_weights(&sub.site_indices(lat)?)?;
    Ok(-w.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>())
}

/// Rényi-n entropy from the Schmidt weights.
pub fn renyi_entropy_oracle(psi: &SpinState, sub: &SubsystemSpec, lat: &LatticeSpec, n: u32) -> Result<f64> {
    if n < 2 {
        return invalid("Renyi index must be at least 2");
    }
    let w = psi.schmidt_weights(&sub.site_indices(lat)?)?;
    Ok(w.iter().map(|x| x.powi(n as i32)).sum::<f64>().ln() / (1.0 - n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableTrace {
    /// Entry 0 is the initial state.
    pub entries: Vec<ObservableEntry>,
}

pub fn quench_experiment(p: &ModelParams, lat: &LatticeSpec, q: &QuenchConfig) -> Result<ObservableTrace> {
    check_capacity(lat.sites)?;
    let mut psi = SpinState::from_config(q, lat.sites)?;
    let mut entries = vec![spin_observables(&psi)];
    for _ in 0..q.n_periods {
        apply_floquet_period(&mut psi, p, lat, q.k_field)?;
        entries.push(spin_observables(&psi));
    }
    Ok(ObservableTrace { entries })
}

/// First period after which the observable vector repeats with period 1 or 2
/// (relative change below `tol`) for `checks` consecutive periods.
pub fn detect_steady_state(trace: &ObservableTrace, tol: f64, checks: usize) -> Option<(usize, usize)> {
    let vec_of = |e: &ObservableEntry| {
        let mut v = e.sx.clone();
        v.push(e.sxsx_edge);
        v
    };
    let rel = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let n: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        d / n
    };
    let vs: Vec<Vec<f64>> = trace.entries.iter().map(vec_of).collect();
    for cycle in [1usize, 2] {
        let mut run = 0;
        for t in cycle..vs.len() {
            if rel(&vs[t], &vs[t - cycle]) < tol {
                run += 1;
                if run >= checks {
                    return Some((t + 1 - checks, cycle));
                }
            } else {
                run = 0;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundaryCondition, InitialState, Units};

    fn lat(l: usize) -> LatticeSpec {
        LatticeSpec::new(l, BoundaryCondition::Open).unwrap()
    }

    #[test]
    fn zero_couplings_are_identity() {
        let p = ModelParams::new(0.0, 0.0, 0.0, 0.0, Units::Radians).unwrap();
        let mut psi = SpinState::product(Basis::X, &[1, -1, 1, 1]).unwrap();
        let before = psi.clone();
        apply_floquet_period(&mut psi, &p, &lat(4), 0.0).unwrap();
        assert_eq!(psi, before);
    }

    #[test]
    fn imaginary_field_polarizes_down() {
        let p = ModelParams::new(0.0, 0.0, 0.0, 0.5, Units::Radians).unwrap();
        let l = LatticeSpec::new(2, BoundaryCondition::Open).unwrap();
        let mut psi = SpinState::product(Basis::X, &[1, 1]).unwrap();
        for _ in 0..30 {
            apply_floquet_period(&mut psi, &p, &l, 0.0).unwrap();
        }
        assert!((psi.z_expect(0) + 1.0).abs() < 1e-10);
    }

    #[test]
    fn product_state_observables() {
        let up = SpinState::product(Basis::Z, &[1; 5]).unwrap();
        assert!(spin_observables(&up).sx.iter().all(|x| x.abs() < 1e-15));
        let right = SpinState::product(Basis::X, &[1; 5]).unwrap();
        let o = spin_observables(&right);
        assert!(o.sx.iter().all(|x| (x - 0.5).abs() < 1e-14));
        assert!((o.ghz_overlap - 0.5).abs() < 1e-14);
    }

    #[test]
    fn ghz_state_overlap_is_one() {
        let a = SpinState::product(Basis::X, &[1; 4]).unwrap();
        let b = SpinState::product(Basis::X, &[-1; 4]).unwrap();
        let mut g = SpinState {
            amplitudes: a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x + y).collect(),
            sites: 4,
        };
        g.normalize().unwrap();
        assert!((ghz_overlap(&g) - 1.0).abs() < 1e-14);
        let mut odd = SpinState {
            amplitudes: a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x - y).collect(),
            sites: 4,
        };
        odd.normalize().unwrap();
        let (e, o) = cat_overlaps(&odd);
        assert!(e.abs() < 1e-14 && (o - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bell_pair_entropy() {
        let s = 0.5f64.sqrt();
        let psi = SpinState { amplitudes: vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)], sites: 2 };
        let e = reduced_entropy_oracle(&psi, &SubsystemSpec::new(1, 1), &lat(2)).unwrap();
        assert!((e - 2f64.ln()).abs() < 1e-14);
        let up = SpinState::product(Basis::Z, &[1, -1]).unwrap();
        assert!(reduced_entropy_oracle(&up, &SubsystemSpec::new(1, 1), &lat(2)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn majoranas_anticommute() {
        let mut psi = SpinState::product(Basis::X, &[1, -1, 1]).unwrap();
        let p = ModelParams::new(0.3, 0.2, 0.7, -0.1, Units::Radians).unwrap();
        apply_floquet_period(&mut psi, &p, &lat(3), 0.0).unwrap();
        let cm = psi.majorana_correlations();
        for a in 0..6 {
            for b in 0..6 {
                let want = if a == b { 2.0 } else { 0.0 };
                assert!((cm[[a, b]] + cm[[b, a]] - c(want, 0.0)).norm() < 1e-12);
            }
        }
        for j in 0..3 {
            assert!((C64::i() * cm[[2 * j, 2 * j + 1]] - c(psi.z_expect(j), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn capacity_limit() {
        assert!(matches!(SpinState::product(Basis::Z, &[1; 15]), Err(Error::Capacity { .. })));
    }

    #[test]
    fn unitary_period_preserves_norm() {
        let p = ModelParams::new(0.3, 0.0, 0.7, 0.0, Units::Radians).unwrap();
        let mut psi = SpinState::product(Basis::X, &[1, -1, 1, 1, -1]).unwrap();
        for _ in 0..10 {
            let n = apply_floquet_period(&mut psi, &p, &LatticeSpec::new(5, BoundaryCondition::PeriodicEven).unwrap(), 0.1).unwrap();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn z2_symmetry_without_k() {
        let p = ModelParams::new(0.3, -0.4, 0.7, 0.2, Units::Radians).unwrap();
        let l = lat(6);
        let mut a = SpinState::product(Basis::X, &[1, -1, 1, 1, -1, 1]).unwrap();
        let mut b = a.flipped();
        for _ in 0..5 {
            apply_floquet_period(&mut a, &p, &l, 0.0).unwrap();
            apply_floquet_period(&mut b, &p, &l, 0.0).unwrap();
        }
        let fa = a.flipped();
        assert!(fa.amplitudes.iter().zip(&b.amplitudes).all(|(x, y)| (x - y).norm() < 1e-10));
    }

    #[test]
    fn steady_state_detects_fixed_trace() {
        let q = QuenchConfig::new(InitialState::AllUp(Basis::X), 30);
        let p = ModelParams::new(0.0, 0.0, 0.0, 0.0, Units::Radians).unwrap();
        let t = quench_experiment(&p, &lat(4), &q).unwrap();
        assert_eq!(detect_steady_state(&t, 1e-6, 10), Some((1, 1)));
    }
}

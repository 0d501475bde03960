use std::f64::consts::PI;

use ndarray::{array, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::model::{LatticeSpec, ModelParams, Parity};

/// Relative tolerance for the per-momentum classification.
pub const DISPERSION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeClass {
    Real,
    /// `ε` purely imaginary, so the pair is `{iγ, -iγ}`.
    ComplexConjugatePair,
    GrowDecayPair,
    Exceptional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub k: f64,
    /// `[ε, -ε]`, with `ε` chosen to have `Im ε ≥ 0` (or `Re ε ≥ 0` when real).
    pub epsilon: [C64; 2],
    /// `w = -iε` (Floquet) or `w = -iλ` (continuous).
    pub w_k: C64,
    /// `x` of the Floquet formula, or the radicand `h² - 2hJ cos k + J²` in the continuous case.
    pub x: C64,
    pub classification: ModeClass,
}

fn canonical(e: C64) -> C64 {
    let flip = e.im < 0.0 || (e.im == 0.0 && e.re < 0.0);
    if flip {
        -e
    } else {
        e
    }
}

fn classify(e: C64, degenerate: bool, defective: bool) -> ModeClass {
    let scale = e.norm().max(1.0);
    if degenerate && defective {
        ModeClass::Exceptional
    } else if e.im.abs() < DISPERSION_TOL * scale {
        ModeClass::Real
    } else if e.re.abs() < DISPERSION_TOL * scale {
        ModeClass::ComplexConjugatePair
    } else {
        ModeClass::GrowDecayPair
    }
}

/// 2×2 Bloch Hamiltonian of the continuous-time model in the `(c_k, c_{-k}†)` basis.
pub fn continuous_bloch(j: C64, h: C64, k: f64) -> Array2<C64> {
    let d = j * k.cos() - h;
    let o = j * k.sin() * C64::i();
    array![[d * 2.0, o * 2.0], [-o * 2.0, -d * 2.0]]
}

/// One-period Bloch operator `U_XX,k U_Z,k`.
pub fn floquet_bloch(j: C64, h: C64, k: f64) -> Array2<C64> {
    let (cj, sj) = ((j * 2.0).cos(), (j * 2.0).sin() * C64::i());
    let uxx = array![[cj + sj * k.cos(), sj * k.sin() * C64::i()], [-sj * k.sin() * C64::i(), cj - sj * k.cos()]];
    let (ch, sh) = ((h * 2.0).cos(), (h * 2.0).sin() * C64::i());
    let uz = array![[ch - sh, c(0.0, 0.0)], [c(0.0, 0.0), ch + sh]];
    uxx.dot(&uz)
}

/// `λ = ±2 √(h² - 2hJ cos k + J²)`.
pub fn dispersion_continuous(j: C64, h: C64, k: f64) -> DispersionPoint {
    let rad = h * h - h * j * 2.0 * k.cos() + j * j;
    let lam = canonical(rad.sqrt() * 2.0);
    let hk = continuous_bloch(j, h, k);
    let scale = (j.norm() + h.norm()).max(1e-300);
    let degenerate = lam.norm() < DISPERSION_TOL * scale.max(1.0);
    let defective = hk.iter().any(|z| z.norm() > DISPERSION_TOL * scale);
    DispersionPoint {
        k,
        epsilon: [lam, -lam],
        w_k: -C64::i() * lam,
        x: rad,
        classification: classify(lam, degenerate, defective),
    }
}

/// Floquet quasienergy pair from `cos ε = x/4`, i.e. `e^{w} = x/4 ± √((x/4)² - 1)`.
pub fn floquet_dispersion(j: C64, h: C64, k: f64) -> DispersionPoint {
    let ck = k.cos();
    let x = ((h - j) * 2.0).cos() * (2.0 * (1.0 + ck)) + ((h + j) * 2.0).cos() * (2.0 * (1.0 - ck));
    let eps = canonical(fold(( x / 4.0).acos()));
    let disc = (x / 4.0) * (x / 4.0) - 1.0;
    let degenerate = disc.norm() < DISPERSION_TOL;
    let defective = {
        let u = floquet_bloch(j, h, k);
        let center = x / 4.0;
        let off = [u[[0, 0]] - center, u[[0, 1]], u[[1, 0]], u[[1, 1]] - center];
        off.iter().any(|z| z.norm() > 1e-7)
    };
    DispersionPoint {
        k,
        epsilon: [eps, fold(-eps)],
        w_k: -C64::i() * eps,
        x,
        classification: classify(eps, degenerate, defective),
    }
}

/// Folds the real part into (-π, π].
pub fn fold(e: C64) -> C64 {
    let mut re = (e.re + PI).rem_euclid(2.0 * PI) - PI;
    if re <= -PI {
        re += 2.0 * PI;
    }
    C64::new(re, e.im)
}

/// Momenta of a periodic chain: antiperiodic `(2m+1)π/L` for even parity,
/// periodic `2πm/L` for odd parity, folded to (-π, π].
pub fn allowed_momenta(sites: usize, parity: Parity) -> Vec<f64> {
    let shift = match parity {
        Parity::Even => 1.0,
        Parity::Odd => 0.0,
    };
    (0..sites)
        .map(|m| {
            let k = (2.0 * m as f64 + shift) * PI / sites as f64;
            if k > PI {
                k - 2.0 * PI
            } else {
                k
            }
        })
        .collect()
}

fn parity_of(lat: &LatticeSpec) -> Result<Parity> {
    lat.bc
        .parity_sector()
        .ok_or_else(|| Error::Unsupported("momentum-space spectra need a periodic lattice".into()))
}

/// All 2L quasienergies of a periodic chain from the momentum formula.
pub fn analytic_quasienergies(p: &ModelParams, lat: &LatticeSpec) -> Result<Vec<C64>> {
    let parity = parity_of(lat)?;
    Ok(allowed_momenta(lat.sites, parity)
        .into_iter()
        .flat_map(|k| floquet_dispersion(p.j(), p.h(), k).epsilon)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealModeCensus {
    pub count: usize,
    pub total: usize,
    pub density: f64,
}

/// Number of real quasienergies among the 2L momentum-space values.
pub fn count_real_modes(p: &ModelParams, lat: &LatticeSpec, tol_real: f64) -> Result<RealModeCensus> {
    let eps = analytic_quasienergies(p, lat)?;
    let count = eps.iter().filter(|e| e.im.abs() < tol_real).count();
    Ok(RealModeCensus { count, total: eps.len(), density: count as f64 / eps.len() as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eig;

    #[test]
    fn continuous_zero_at_equal_couplings() {
        let j = c(0.3, -0.2);
        let d = dispersion_continuous(j, j, 0.0);
        assert!(d.epsilon[0].norm() < 1e-15);
        assert_eq!(d.classification, ModeClass::Real);
    }

    #[test]
    fn continuous_exceptional_point() {
        let (j, h) = (c(1.0, 0.5), c(1.0, -0.5));
        let k = 0.6f64.acos();
        let d = dispersion_continuous(j, h, k);
        assert!(d.epsilon[0].norm() < 1e-7);
        assert_eq!(d.classification, ModeClass::Exceptional);
        // eigenvectors coalesce onto (-1, 1)/√2
        let hk = continuous_bloch(j, h, k);
        let v = [c(-1.0, 0.0), c(1.0, 0.0)];
        let hv0 = hk[[0, 0]] * v[0] + hk[[0, 1]] * v[1];
        let hv1 = hk[[1, 0]] * v[0] + hk[[1, 1]] * v[1];
        assert!(hv0.norm() < 1e-12 && hv1.norm() < 1e-12);
    }

    #[test]
    fn continuous_brute_force_at_pi() {
        let d = dispersion_continuous(c(0.3, 0.0), c(0.1, 0.0), PI);
        assert!((d.epsilon[0] - c(0.8, 0.0)).norm() < 1e-12);
        let (w, _) = eig(&continuous_bloch(c(0.3, 0.0), c(0.1, 0.0), PI)).unwrap();
        let mut re: Vec<f64> = w.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 0.8).abs() < 1e-12 && (re[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn floquet_zero_mode_at_k0() {
        let j = c(0.4, 0.2);
        let d = floquet_dispersion(j, j, 0.0);
        assert!(d.epsilon[0].norm() < 1e-7);
    }

    #[test]
    fn floquet_matches_bloch_eigenvalues() {
        let (j, h) = (c(0.37, -0.21), c(-0.5, 0.33));
        for k in [0.1, 0.9, 2.0, 3.0] {
            let d = floquet_dispersion(j, h, k);
            let (mu, _) = eig(&floquet_bloch(j, h, k)).unwrap();
            let want: Vec<C64> = mu.iter().map(|m| fold(C64::i() * m.ln())).collect();
            let got = d.epsilon;
            let best = |e: C64| want.iter().map(|w| (fold(*w - e)).norm()).fold(f64::INFINITY, f64::min);
            assert!(best(got[0]) < 1e-10 && best(got[1]) < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn unitary_dispersion_is_real() {
        for k in [0.0, 0.4, 1.7, PI] {
            let d = floquet_dispersion(c(0.4, 0.0), c(1.1, 0.0), k);
            assert!(d.epsilon.iter().all(|e| e.im.abs() < 1e-12));
        }
    }

    #[test]
    fn equal_complex_couplings_have_single_real_pair() {
        let p = ModelParams::new(0.3, 0.2, 0.3, 0.2, crate::model::Units::Radians).unwrap();
        let lat = LatticeSpec::new(12, crate::model::BoundaryCondition::PeriodicOdd).unwrap();
        let census = count_real_modes(&p, &lat, 1e-8).unwrap();
        assert_eq!(census.count, 2);
    }

    #[test]
    fn momenta_sets() {
        let even = allowed_momenta(4, Parity::Even);
        assert_eq!(even.len(), 4);
        assert!(even.iter().all(|k| k.abs() > 0.1 && k.abs() < PI));
        let odd = allowed_momenta(4, Parity::Odd);
        assert!(odd.contains(&0.0) && odd.contains(&PI));
    }
}

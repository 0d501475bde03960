//! Entropies of Gaussian states from Majorana correlation blocks, plus scaling
//! fits and finite-size collapse.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::CorrelationMatrix;
use crate::linalg::{eig, eigvalsh, inv, lstsq, C64};
use crate::model::{LatticeSpec, SubsystemSpec, TeePartition};

pub const NU_CLAMP: f64 = 1.0 - 1e-14;
pub const PURITY_TOL: f64 = 1e-6;

/// Mode entropy `-(1-ν)/2 ln (1-ν)/2 - (1+ν)/2 ln (1+ν)/2`.
pub fn mode_entropy(nu: f64) -> f64 {
    let nu = nu.clamp(-NU_CLAMP, NU_CLAMP);
    let (p, q) = (0.5 * (1.0 - nu), 0.5 * (1.0 + nu));
    -(p * p.ln() + q * q.ln())
}

/// Rényi-n weight of one mode, `ln[((1-ν)/2)^n + ((1+ν)/2)^n]`.
fn mode_renyi_log(nu: f64, n: u32) -> f64 {
    let nu = nu.clamp(-1.0, 1.0);
    ((0.5 * (1.0 - nu)).powi(n as i32) + (0.5 * (1.0 + nu)).powi(n as i32)).ln()
}

/// Spectrum of the Hermitian block `C'_A`; errors if it leaves [-1, 1].
pub fn nu_spectrum(cprime_a: &Array2<C64>) -> Result<Vec<f64>> {
    if cprime_a.is_empty() {
        return Ok(Vec::new());
    }
    let nu = eigvalsh(cprime_a)?.to_vec();
    let worst = nu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !worst.is_finite() || worst > 1.0 + PURITY_TOL {
        return Err(Error::PurityViolation { max_abs_nu: worst });
    }
    Ok(nu)
}

/// Entropy and `ν` spectrum of a `C'_A` block. The 2L_A eigenvalues come in
/// `±ν` pairs, each pair one fermionic mode.
pub fn entropy_from_cprime(cprime_a: &Array2<C64>) -> Result<(f64, Vec<f64>)> {
    let nu = nu_spectrum(cprime_a)?;
    let s = 0.5 * nu.iter().map(|&x| mode_entropy(x)).sum::<f64>();
    Ok((s.max(0.0), nu))
}

/// Trace form `-tr[X ln X + (1-X) ln(1-X)] / 2` with `X = (1 - C'_A)/2`,
/// evaluated through a general eigendecomposition and matrix logarithms.
/// Needs every `ν` strictly inside (-1, 1).
pub fn entropy_trace_form(cprime_a: &Array2<C64>) -> Result<f64> {
    let n = cprime_a.nrows();
    let id = Array2::<C64>::eye(n);
    let x = (&id - cprime_a) * C64::new(0.5, 0.0);
    let xlogx = |m: &Array2<C64>| -> Result<C64> {
        let (w, v) = eig(m)?;
        let vinv = inv(&v)?;
        let log = v.dot(&Array2::from_diag(&w.mapv(|z| z.ln()))).dot(&vinv);
        Ok(m.dot(&log).diag().sum())
    };
    let total = xlogx(&x)? + xlogx(&(&id - &x))?;
    Ok(-0.5 * total.re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub s_a: f64,
    pub renyi: BTreeMap<u32, f64>,
    pub nu: Vec<f64>,
    pub subsystem: SubsystemSpec,
}

fn sites_of(c: &CorrelationMatrix, sub: &SubsystemSpec, lat: &LatticeSpec) -> Result<Vec<usize>> {
    if c.sites() != lat.sites {
        return invalid(format!("correlation matrix has {} sites, lattice {}", c.sites(), lat.sites));
    }
    sub.site_indices(lat)
}

pub fn entropy_of_sites(c: &CorrelationMatrix, sites: &[usize]) -> Result<f64> {
    Ok(entropy_from_cprime(&c.block(sites))?.0)
}

pub fn entropy_from_correlations(c: &CorrelationMatrix, sub: &SubsystemSpec, lat: &LatticeSpec) -> Result<EntropyReport> {
    let sites = sites_of(c, sub, lat)?;
    let (s_a, nu) = entropy_from_cprime(&c.block(&sites))?;
    Ok(EntropyReport { s_a, renyi: BTreeMap::new(), nu, subsystem: *sub })
}

pub fn renyi_from_nu(nu: &[f64], n: u32) -> Result<f64> {
    match n {
        0 => invalid("Renyi index must be positive"),
        1 => Ok(0.5 * nu.iter().map(|&x| mode_entropy(x)).sum::<f64>()),
        _ => Ok(0.5 * nu.iter().map(|&x| mode_renyi_log(x, n)).sum::<f64>() / (1.0 - n as f64)),
    }
}

pub fn renyi_entropy(c: &CorrelationMatrix, sub: &SubsystemSpec, lat: &LatticeSpec, n: u32) -> Result<f64> {
    let sites = sites_of(c, sub, lat)?;
    renyi_from_nu(&nu_spectrum(&c.block(&sites))?, n)
}

pub fn mutual_information(c: &CorrelationMatrix, a: &SubsystemSpec, b: &SubsystemSpec, lat: &LatticeSpec) -> Result<f64> {
    let sa = sites_of(c, a, lat)?;
    let sb = sites_of(c, b, lat)?;
    if sa.iter().any(|j| sb.contains(j)) {
        return invalid("subsystems overlap");
    }
    let union: Vec<usize> = sa.iter().chain(&sb).copied().collect();
    Ok(entropy_of_sites(c, &sa)? + entropy_of_sites(c, &sb)? - entropy_of_sites(c, &union)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeeResult {
    pub s_top: f64,
    pub partition: [usize; 4],
    pub sites: usize,
}

/// `S_top = S_AB + S_BC - S_B - S_ABC`, with A and C at the chain ends.
pub fn tee(c: &CorrelationMatrix, part: &TeePartition) -> Result<TeeResult> {
    let l = c.sites();
    if part.lengths.iter().sum::<usize>() != l {
        return invalid(format!("partition {:?} does not cover {l} sites", part.lengths));
    }
    let seg = |ids: &[usize]| -> Vec<usize> {
        let mut v: Vec<usize> = ids.iter().flat_map(|&i| part.segment(i)).collect();
        v.sort_unstable();
        v
    };
    let ab = entropy_of_sites(c, &seg(&[0, 1]))?;
    let bc = entropy_of_sites(c, &seg(&[1, 2]))?;
    let b = entropy_of_sites(c, &seg(&[1]))?;
    let abc = entropy_of_sites(c, &seg(&[0, 1, 2]))?;
    Ok(TeeResult { s_top: ab + bc - b - abc, partition: part.lengths, sites: l })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingLaw {
    Area,
    Log,
    Volume,
}

impl std::fmt::Display for ScalingLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScalingLaw::Area => "area",
            ScalingLaw::Log => "log",
            ScalingLaw::Volume => "volume",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingThresholds {
    /// Minimum linear slope (nats per site) for a volume law.
    pub volume_slope: f64,
    /// Minimum log coefficient for a log law.
    pub log_coefficient: f64,
    pub min_points: usize,
}

impl Default for ScalingThresholds {
    fn default() -> Self {
        ScalingThresholds { volume_slope: 0.05, log_coefficient: 0.02, min_points: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    /// RMS residual of the log fit.
    pub residual: f64,
    pub law: ScalingLaw,
    pub slope: f64,
    pub linear_residual: f64,
}

/// Chord length `(L/π) sin(π L_A / L)`.
pub fn chord(l: f64, la: f64) -> f64 {
    l / std::f64::consts::PI * (std::f64::consts::PI * la / l).sin()
}

fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let design = Array2::from_shape_fn((x.len(), 2), |(i, j)| if j == 0 { x[i] } else { 1.0 });
    let yv = Array1::from_vec(y.to_vec());
    let beta = lstsq(&design, &yv).ok_or_else(|| Error::Fit("degenerate design matrix".into()))?;
    let rms = (x.iter().zip(y).map(|(xi, yi)| (beta[0] * xi + beta[1] - yi).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    Ok((beta[0], beta[1], rms))
}

/// Fits `S = a ln((L/π) sin(π L_A/L)) + b` and a line in `L_A`, then assigns a law.
pub fn fit_scaling(points: &[(usize, usize, f64)], th: &ScalingThresholds) -> Result<ScalingFit> {
    if points.len() < th.min_points {
        return Err(Error::Fit(format!("need at least {} points, got {}", th.min_points, points.len())));
    }
    let logx: Vec<f64> = points.iter().map(|&(l, la, _)| chord(l as f64, la as f64).ln()).collect();
    let lin: Vec<f64> = points.iter().map(|&(_, la, _)| la as f64).collect();
    let s: Vec<f64> = points.iter().map(|p| p.2).collect();
    let (a, b, residual) = fit_line(&logx, &s)?;
    let (slope, _, linear_residual) = fit_line(&lin, &s)?;
    let law = if slope > th.volume_slope && linear_residual < residual {
        ScalingLaw::Volume
    } else if a > th.log_coefficient && residual <= linear_residual {
        ScalingLaw::Log
    } else {
        ScalingLaw::Area
    };
    Ok(ScalingFit { a, b, residual, law, slope, linear_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub beta_j0: f64,
    pub nu: f64,
    pub collapse_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseGrid {
    pub beta_range: (f64, f64),
    pub nu_range: (f64, f64),
    pub coarse: usize,
    pub refinements: usize,
}

impl Default for CollapseGrid {
    fn default() -> Self {
        CollapseGrid { beta_range: (-2.0, 2.0), nu_range: (0.3, 2.0), coarse: 41, refinements: 4 }
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if xs.len() < 2 || x < xs[0] || x > xs[xs.len() - 1] {
        return None;
    }
    let i = xs.partition_point(|&v| v < x).clamp(1, xs.len() - 1);
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    Some(ys[i - 1] + t * (ys[i] - ys[i - 1]))
}

/// Mean squared spread between rescaled curves, compared pairwise on the
/// abscissae of each curve that fall inside the other.
pub fn collapse_cost(curves: &BTreeMap<usize, Vec<(f64, f64)>>, beta0: f64, nu: f64) -> Option<f64> {
    let scaled: Vec<(Vec<f64>, Vec<f64>)> = curves
        .iter()
        .map(|(&l, pts)| {
            let mut v: Vec<(f64, f64)> = pts.iter().map(|&(b, s)| ((b - beta0) * (l as f64).powf(nu), s)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v.into_iter().unzip()
        })
        .collect();
    let (mut sum, mut count) = (0.0, 0usize);
    for (i, (xi, yi)) in scaled.iter().enumerate() {
        for (j, (xj, yj)) in scaled.iter().enumerate() {
            if i == j {
                continue;
            }
            for (x, y) in xi.iter().zip(yi) {
                if let Some(v) = interp(xj, yj, *x) {
                    sum += (v - y).powi(2);
                    count += 1;
                }
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Grid search over `(β_J0, ν)` followed by local refinement; ties go to smaller `ν`.
pub fn tee_collapse(curves: &BTreeMap<usize, Vec<(f64, f64)>>, grid: &CollapseGrid) -> Result<CollapseResult> {
    if curves.len() < 3 {
        return Err(Error::Fit(format!("collapse needs at least 3 sizes, got {}", curves.len())));
    }
    let search = |b: (f64, f64), n: (f64, f64), steps: usize| -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for bi in 0..steps {
            let beta0 = b.0 + (b.1 - b.0) * bi as f64 / (steps - 1) as f64;
            for ni in 0..steps {
                let nu = n.0 + (n.1 - n.0) * ni as f64 / (steps - 1) as f64;
                if nu <= 0.0 {
                    continue;
                }
                if let Some(cost) = collapse_cost(curves, beta0, nu) {
                    let better = match best {
                        None => true,
                        Some((_, bn, bc)) => cost < bc * (1.0 - 1e-12) || (cost <= bc * (1.0 + 1e-12) && nu < bn),
                    };
                    if better {
                        best = Some((beta0, nu, cost));
                    }
                }
            }
        }
        best
    };
    // β_J0 is searched only where every curve has data.
    let lo = curves.values().filter_map(|c| c.iter().map(|p| p.0).reduce(f64::min)).fold(grid.beta_range.0, f64::max);
    let hi = curves.values().filter_map(|c| c.iter().map(|p| p.0).reduce(f64::max)).fold(grid.beta_range.1, f64::min);
    if !(lo < hi) {
        return Err(Error::Fit("curves share no β_J range".into()));
    }
    let beta_range = (lo, hi);
    let steps = grid.coarse.max(3);
    let (db0, dn0) = (
        (beta_range.1 - beta_range.0) / (steps - 1) as f64,
        (grid.nu_range.1 - grid.nu_range.0) / (steps - 1) as f64,
    );
    let mut coarse: Vec<(f64, f64, f64)> = Vec::new();
    for bi in 0..steps {
        for ni in 0..steps {
            let (beta0, nu) = (beta_range.0 + db0 * bi as f64, grid.nu_range.0 + dn0 * ni as f64);
            if nu > 0.0 {
                if let Some(cost) = collapse_cost(curves, beta0, nu) {
                    coarse.push((beta0, nu, cost));
                }
            }
        }
    }
    if coarse.is_empty() {
        return Err(Error::Fit("rescaled curves never overlap".into()));
    }
    coarse.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.1.total_cmp(&b.1)));
    let mut best: Option<(f64, f64, f64)> = None;
    for &(sb, sn, sc) in coarse.iter().take(5) {
        let (mut b0, mut nu, mut cost) = (sb, sn, sc);
        let (mut db, mut dn) = (db0, dn0);
        for _ in 0..grid.refinements {
            if let Some(r) = search((b0 - db, b0 + db), ((nu - dn).max(1e-6), nu + dn), 11) {
                if r.2 <= cost {
                    (b0, nu, cost) = r;
                }
            }
            db /= 5.0;
            dn /= 5.0;
        }
        let better = match best {
            None => true,
            Some((_, bn, bc)) => cost < bc * (1.0 - 1e-12) || (cost <= bc * (1.0 + 1e-12) && nu < bn),
        };
        if better {
            best = Some((b0, nu, cost));
        }
    }
    let (b0, nu, cost) = best.expect("at least one start");
    Ok(CollapseResult { beta_j0: b0, nu, collapse_residual: cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianFrame;
    use crate::linalg::c;
    use crate::model::BoundaryCondition;
    use proptest::prelude::*;

    fn lat(l: usize) -> LatticeSpec {
        LatticeSpec::new(l, BoundaryCondition::Open).unwrap()
    }

    #[test]
    fn product_state_has_zero_entropy() {
        let cm = GaussianFrame::from_z_signs(&[1, -1, 1, 1, -1, -1]).correlations();
        let r = entropy_from_correlations(&cm, &SubsystemSpec::new(2, 3), &lat(6)).unwrap();
        assert!(r.s_a.abs() < 1e-12);
        assert!(renyi_entropy(&cm, &SubsystemSpec::new(2, 3), &lat(6), 2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_modes() {
        let z = Array2::<C64>::zeros((6, 6));
        assert!((entropy_from_cprime(&z).unwrap().0 - 3.0 * 2f64.ln()).abs() < 1e-14);
        assert!((renyi_from_nu(&[0.0, 0.0], 2).unwrap() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn purity_violation_detected() {
        let mut z = Array2::<C64>::zeros((2, 2));
        z[[0, 0]] = c(1.1, 0.0);
        assert!(matches!(entropy_from_cprime(&z), Err(Error::PurityViolation { .. })));
    }

    #[test]
    fn overlapping_mutual_information_rejected() {
        let cm = GaussianFrame::vacuum(6).correlations();
        assert!(mutual_information(&cm, &SubsystemSpec::new(1, 3), &SubsystemSpec::new(3, 2), &lat(6)).is_err());
    }

    #[test]
    fn scaling_fit_recovers_log_law() {
        let pts: Vec<(usize, usize, f64)> = (1..=10).map(|la| (100, 5 * la, 0.25 * chord(100.0, 5.0 * la as f64).ln() + 0.3)).collect();
        let f = fit_scaling(&pts, &ScalingThresholds::default()).unwrap();
        assert!((f.a - 0.25).abs() < 1e-12 && (f.b - 0.3).abs() < 1e-12);
        assert_eq!(f.law, ScalingLaw::Log);
    }

    #[test]
    fn scaling_fit_laws() {
        let th = ScalingThresholds::default();
        let vol: Vec<_> = (1..=8).map(|la| (200, 2 * la, 0.2 * (2 * la) as f64)).collect();
        assert_eq!(fit_scaling(&vol, &th).unwrap().law, ScalingLaw::Volume);
        let area: Vec<_> = (3..=10).map(|la| (200, 2 * la, 0.7 - (-(2.0 * la as f64)).exp())).collect();
        assert_eq!(fit_scaling(&area, &th).unwrap().law, ScalingLaw::Area);
        assert!(fit_scaling(&area[..4], &th).is_err());
        let flat: Vec<_> = (0..6).map(|_| (200, 10, 0.5)).collect();
        assert!(matches!(fit_scaling(&flat, &th), Err(Error::Fit(_))));
    }

    fn synthetic(beta0: f64) -> BTreeMap<usize, Vec<(f64, f64)>> {
        [16usize, 32, 64]
            .iter()
            .map(|&l| {
                let pts = (0..201).map(|i| -1.0 + 0.01 * i as f64).map(|b| (b, ((b - beta0) * l as f64 / 16.0).tanh())).collect();
                (l, pts)
            })
            .collect()
    }

    #[test]
    fn collapse_recovers_synthetic() {
        let r = tee_collapse(&synthetic(-0.3), &CollapseGrid::default()).unwrap();
        assert!((r.beta_j0 + 0.3).abs() < 1e-3, "{r:?}");
        assert!((r.nu - 1.0).abs() < 1e-3, "{r:?}");
    }

    /// Kitaev dimer state: Majoranas paired across every bond, ends paired together.
    fn kitaev_dimers(l: usize) -> CorrelationMatrix {
        let mut pairs: Vec<(usize, usize)> = (0..l - 1).map(|j| (2 * j + 1, 2 * j + 2)).collect();
        pairs.push((0, 2 * l - 1));
        let mut phi = Array2::<C64>::zeros((2 * l, l));
        for (col, &(m, n)) in pairs.iter().enumerate() {
            phi[[m, col]] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            phi[[n, col]] = c(0.0, std::f64::consts::FRAC_1_SQRT_2);
        }
        GaussianFrame::from_columns(phi).unwrap().correlations()
    }

    #[test]
    fn tee_of_dimer_and_product_states() {
        let l = 12;
        let k = kitaev_dimers(l);
        let q = TeePartition::quarters(l).unwrap();
        assert!((tee(&k, &q).unwrap().s_top - 2f64.ln()).abs() < 1e-12);
        let uneven = TeePartition::new([2, 5, 3, 2], l).unwrap();
        assert!((tee(&k, &uneven).unwrap().s_top - 2f64.ln()).abs() < 1e-12);
        let p = GaussianFrame::from_z_signs(&[1, -1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1]).correlations();
        assert!(tee(&p, &q).unwrap().s_top.abs() < 1e-12);
        assert!(tee(&p, &TeePartition::quarters(8).unwrap()).is_err());
    }

    #[test]
    fn tee_symmetric_under_end_exchange() {
        let k = kitaev_dimers(10);
        let a = tee(&k, &TeePartition::new([2, 3, 4, 1], 10).unwrap()).unwrap().s_top;
        let b = tee(&k, &TeePartition::new([4, 3, 2, 1], 10).unwrap()).unwrap().s_top;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn shuffled_sizes_collapse_worse() {
        let good = synthetic(-0.3);
        let r = tee_collapse(&good, &CollapseGrid::default()).unwrap();
        let sizes: Vec<usize> = good.keys().copied().collect();
        let shuffled: BTreeMap<usize, Vec<(f64, f64)>> =
            sizes.iter().zip(sizes.iter().rev()).map(|(&from, &to)| (to, good[&from].clone())).collect();
        let s = tee_collapse(&shuffled, &CollapseGrid::default()).unwrap();
        assert!(s.collapse_residual > 100.0 * r.collapse_residual.max(1e-12), "{r:?} {s:?}");
    }

    #[test]
    fn collapse_needs_three_sizes() {
        let mut d = synthetic(0.0);
        d.remove(&16);
        assert!(tee_collapse(&d, &CollapseGrid::default()).is_err());
    }

    proptest! {
        #[test]
        fn mode_entropy_bounds(nu in -1.0f64..1.0) {
            let s = mode_entropy(nu);
            prop_assert!(s >= -1e-15 && s <= 2f64.ln() + 1e-15);
            prop_assert!((s - mode_entropy(-nu)).abs() < 1e-15);
        }

        #[test]
        fn renyi_is_below_von_neumann(nu in -0.999f64..0.999, n in 2u32..6) {
            let s1 = renyi_from_nu(&[nu, -nu], 1).unwrap();
            let sn = renyi_from_nu(&[nu, -nu], n).unwrap();
            prop_assert!(sn <= s1 + 1e-12);
        }
    }
}

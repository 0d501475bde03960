//! Twist-field predictions for a quench under the rotated Hamiltonian `(1 - iη) H`.
//!
//! `tr ρ_A^n = (π/2τ₀)^{2d_n} G^{d_n}` with `τ₀ = ε + η t`, `d_n = (c/12)(n - 1/n)`
//! and `G = (cosh(πl/2τ₀) + cosh(πt/τ₀)) / (8 sinh²(πl/4τ₀) cosh²(πt/2τ₀))`.
//! The model-dependent prefactors are set to one.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CftParams {
    pub c: f64,
    pub epsilon: f64,
    /// Rotation angle of the time axis.
    pub eta_rot: f64,
    pub l: f64,
    pub n: u32,
}

impl CftParams {
    pub fn new(c: f64, epsilon: f64, eta_rot: f64, l: f64, n: u32) -> Result<Self> {
        let p = CftParams { c, epsilon, eta_rot, l, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return invalid(format!("central charge must be positive, got {}", self.c));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.eta_rot.is_finite() && self.eta_rot >= 0.0) {
            return invalid(format!("eta must be nonnegative, got {}", self.eta_rot));
        }
        if !(self.l.is_finite() && self.l > 0.0) {
            return invalid(format!("l must be positive, got {}", self.l));
        }
        if self.n == 0 {
            return invalid("Renyi index must be at least 1");
        }
        Ok(())
    }

    pub fn tau0(&self, t: f64) -> f64 {
        self.epsilon + self.eta_rot * t
    }

    pub fn d_n(&self, n: f64) -> f64 {
        self.c / 12.0 * (n - 1.0 / n)
    }
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

fn ln_sinh(x: f64) -> f64 {
    x + (-(-2.0 * x).exp()).ln_1p() - LN_2
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `2 ln(π/2τ₀) + ln G`, the common bracket of every Rényi index.
pub fn log_bracket(p: &CftParams, t: f64) -> f64 {
    let tau = p.tau0(t);
    let ln_num = log_add_exp(ln_cosh(PI * p.l / (2.0 * tau)), ln_cosh(PI * t / tau));
    let ln_den = 8f64.ln() + 2.0 * ln_sinh(PI * p.l / (4.0 * tau)) + 2.0 * ln_cosh(PI * t / (2.0 * tau));
    2.0 * (PI / (2.0 * tau)).ln() + ln_num - ln_den
}

/// `ln tr ρ_A^n`.
pub fn ln_tr_rho_n(p: &CftParams, t: f64) -> f64 {
    p.d_n(p.n as f64) * log_bracket(p, t)
}

pub fn tr_rho_n(p: &CftParams, t: f64) -> Result<f64> {
    p.validate()?;
    let v = ln_tr_rho_n(p, t);
    if !v.is_finite() {
        return invalid(format!("ln tr rho^n is not finite at t = {t} (tau0 = {})", p.tau0(t)));
    }
    Ok(v.exp())
}

/// `-∂_n tr ρ_A^n` at `n = 1`, unnormalized: `-(c/6)[2 ln(π/2τ₀) + ln G]`.
pub fn entropy_raw(p: &CftParams, t: f64) -> f64 {
    -p.c / 6.0 * log_bracket(p, t)
}

/// Piecewise large-`l/τ₀` form, already normalized.
pub fn entropy_asymptote(p: &CftParams, t: f64) -> f64 {
    let tau = p.tau0(t);
    let base = p.c / 3.0 * (tau / p.epsilon).ln();
    if t < p.l / 2.0 {
        base + PI * p.c * t / (6.0 * tau)
    } else {
        base + PI * p.c * p.l / (12.0 * tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityBounds {
    /// Valid only while `t ≤ max_t_over_l_eta · l/η`.
    pub max_t_over_l_eta: f64,
    /// Valid only while `τ₀ ≤ max_tau_ratio · min(t, l)`.
    pub max_tau_ratio: f64,
}

impl Default for ValidityBounds {
    fn default() -> Self {
        ValidityBounds { max_t_over_l_eta: 0.5, max_tau_ratio: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CftCurve {
    pub t_grid: Vec<f64>,
    /// `S_A(t) - S_A(0)`.
    pub s_a: Vec<f64>,
    pub validity_mask: Vec<bool>,
}

pub fn is_valid(p: &CftParams, t: f64, b: &ValidityBounds) -> bool {
    let late = p.eta_rot > 0.0 && t > b.max_t_over_l_eta * p.l / p.eta_rot;
    !late && p.tau0(t) <= b.max_tau_ratio * t.min(p.l)
}

pub fn entropy_curve(p: &CftParams, t_grid: &[f64], b: &ValidityBounds) -> Result<CftCurve> {
    p.validate()?;
    if t_grid.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return invalid("time grid must be finite and nonnegative");
    }
    let s0 = entropy_raw(p, 0.0);
    Ok(CftCurve {
        t_grid: t_grid.to_vec(),
        s_a: t_grid.iter().map(|&t| entropy_raw(p, t) - s0).collect(),
        validity_mask: t_grid.iter().map(|&t| is_valid(p, t, b)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Numeric peak time over analytic peak time.
    pub peak_time_ratio: f64,
    pub peak_height_ratio: f64,
    /// Both curves end with the same sign of `dS/dt`.
    pub late_trend_agrees: bool,
    pub late_slope_cft: f64,
    pub late_slope_numeric: f64,
    /// RMS of the difference over valid overlapping points.
    pub rms: f64,
}

fn peak(ts: &[f64], ss: &[f64]) -> (f64, f64) {
    let i = (0..ss.len()).fold(0, |b, i| if ss[i] > ss[b] { i } else { b });
    (ts[i], ss[i])
}

/// Mean slope over the last `frac` of a curve.
fn late_slope(ts: &[f64], ss: &[f64], frac: f64) -> f64 {
    let n = ts.len();
    let k = ((n as f64 * frac).ceil() as usize).clamp(2, n);
    let (t0, t1) = (ts[n - k], ts[n - 1]);
    (ss[n - 1] - ss[n - k]) / (t1 - t0)
}

fn interp(ts: &[f64], ss: &[f64], t: f64) -> Option<f64> {
    if t < ts[0] || t > ts[ts.len() - 1] {
        return None;
    }
    let i = ts.partition_point(|&x| x < t);
    if i == 0 {
        return Some(ss[0]);
    }
    let w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    Some(ss[i - 1] + w * (ss[i] - ss[i - 1]))
}

/// Compares an analytic curve with a numeric `(t, S_A)` trace, both normalized
/// to their value at the first time.
pub fn compare_to_numerics(curve: &CftCurve, numeric: &[(f64, f64)]) -> Result<ComparisonReport> {
    if numeric.len() < 2 || curve.t_grid.len() < 2 {
        return invalid("curves need at least two points");
    }
    let nt: Vec<f64> = numeric.iter().map(|p| p.0).collect();
    let s0 = numeric[0].1;
    let ns: Vec<f64> = numeric.iter().map(|p| p.1 - s0).collect();
    let lo = nt[0].max(curve.t_grid[0]);
    let hi = nt[nt.len() - 1].min(curve.t_grid[curve.t_grid.len() - 1]);
    if lo >= hi {
        return invalid("analytic and numeric time grids do not overlap");
    }
    let (tc, sc) = peak(&curve.t_grid, &curve.s_a);
    let (tn, sn) = peak(&nt, &ns);
    let diffs: Vec<f64> = curve
        .t_grid
        .iter()
        .zip(&curve.s_a)
        .zip(&curve.validity_mask)
        .filter(|(_, &v)| v)
        .filter_map(|((&t, &s), _)| interp(&nt, &ns, t).map(|x| x - s))
        .collect();
    let rms = if diffs.is_empty() { f64::NAN } else { (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt() };
    let late_slope_cft = late_slope(&curve.t_grid, &curve.s_a, 0.25);
    let late_slope_numeric = late_slope(&nt, &ns, 0.25);
    Ok(ComparisonReport {
        peak_time_ratio: tn / tc,
        peak_height_ratio: sn / sc,
        late_trend_agrees: late_slope_cft.signum() == late_slope_numeric.signum(),
        late_slope_cft,
        late_slope_numeric,
        rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig11(eta: f64) -> CftParams {
        CftParams::new(0.5, 0.185, eta, 10.0, 1).unwrap()
    }

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
    }

    #[test]
    fn n_one_is_normalized() {
        let p = fig11(0.2);
        for t in grid(20.0, 50) {
            assert!((tr_rho_n(&p, t).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn high_precision_reference() {
        // mpmath at 50 digits
        let p = CftParams::new(0.5, 0.185, 0.1, 10.0, 2).unwrap();
        assert!((ln_tr_rho_n(&p, 5.0) - -1.286146735331438994209271).abs() < 1e-12);
        assert!((tr_rho_n(&p, 5.0).unwrap() - 0.2763335204617740568686879).abs() < 1e-13);
        let c = entropy_curve(&fig11(0.1), &[0.0, 5.0], &ValidityBounds::default()).unwrap();
        assert!((c.s_a[1] - 1.955834810214138957011374).abs() < 1e-12);
    }

    #[test]
    fn no_overflow_for_large_l() {
        let p = CftParams::new(0.5, 0.01, 0.0, 500.0, 2).unwrap();
        let v = ln_tr_rho_n(&p, 100.0);
        assert!(v.is_finite() && v < -700.0);
        assert!(tr_rho_n(&p, 100.0).unwrap() >= 0.0);
    }

    #[test]
    fn unitary_slope_and_plateau() {
        let p = fig11(0.0);
        let slope = (entropy_raw(&p, 3.0) - entropy_raw(&p, 2.0)) / 1.0;
        assert!((slope - PI * p.c / (6.0 * p.epsilon)).abs() < 1e-6);
        let plateau = entropy_raw(&p, 8.0) - entropy_raw(&p, 0.0);
        // the asymptote drops the constant (c/6) ln 4
        assert!((plateau - entropy_asymptote(&p, 8.0) + p.c / 6.0 * 4f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn rotated_curves_rise_then_fall() {
        for eta in [0.1, 0.2, 0.3] {
            let g = grid(20.0, 2000);
            let c = entropy_curve(&fig11(eta), &g, &ValidityBounds::default()).unwrap();
            let (tp, _) = peak(&c.t_grid, &c.s_a);
            assert!((3.5..=6.5).contains(&tp), "eta {eta}: peak at {tp}");
            assert!(c.s_a.last().unwrap() < &c.s_a[(tp / 0.01) as usize]);
            for w in c.t_grid.windows(2).zip(c.s_a.windows(2)) {
                if w.0[0] >= 2.0 * 0.185 && w.0[1] <= 4.0 {
                    assert!(w.1[1] >= w.1[0] - 1e-12);
                }
            }
        }
    }

    #[test]
    fn small_rotation_limit() {
        let g = grid(10.0, 100);
        let b = ValidityBounds::default();
        let a = entropy_curve(&fig11(0.0), &g, &b).unwrap();
        let c = entropy_curve(&fig11(1e-12), &g, &b).unwrap();
        assert!(a.s_a.iter().zip(&c.s_a).all(|(x, y)| (x - y).abs() < 1e-8));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let base = fig11(0.1);
        for t in [1.0, 5.0, 9.0] {
            let h = 1e-4;
            let f = |n: f64| (CftParams { n: 1, ..base }.d_n(n) * log_bracket(&base, t)).exp();
            let fd = -(f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
            let an = entropy_raw(&base, t);
            assert!(((fd - an) / an).abs() < 1e-6, "{fd} vs {an}");
        }
    }

    #[test]
    fn validity_mask_bounds() {
        let b = ValidityBounds::default();
        let p = fig11(0.1);
        assert!(!is_valid(&p, 0.0, &b));
        assert!(is_valid(&p, 5.0, &b));
        assert!(!is_valid(&fig11(0.2), 5.0, &b));
        assert!(!is_valid(&fig11(0.01), 501.0, &b));
    }

    #[test]
    fn self_comparison() {
        let c = entropy_curve(&fig11(0.1), &grid(15.0, 300), &ValidityBounds::default()).unwrap();
        let num: Vec<(f64, f64)> = c.t_grid.iter().copied().zip(c.s_a.iter().copied()).collect();
        let r = compare_to_numerics(&c, &num).unwrap();
        assert_eq!((r.peak_time_ratio, r.peak_height_ratio, r.late_trend_agrees), (1.0, 1.0, true));
        assert!(r.rms.abs() < 1e-15);
        assert!(compare_to_numerics(&c, &[(20.0, 0.0), (30.0, 1.0)]).is_err());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(CftParams::new(0.5, 0.0, 0.1, 10.0, 1).is_err());
        assert!(CftParams::new(0.5, 0.1, -0.1, 10.0, 1).is_err());
        assert!(CftParams::new(0.5, 0.1, 0.1, 0.0, 1).is_err());
    }
}

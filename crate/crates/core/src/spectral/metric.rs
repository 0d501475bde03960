use std::f64::consts::PI;

use ndarray::{array, Array1, Array2};
use ndarray_linalg::SVD;
use serde::{Deserialize, Serialize};

use super::dispersion::{continuous_bloch, floquet_bloch, fold};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, eig, eye, fro, inv, C64};
use crate::model::ModelParams;

/// Residual below which a metric certifies pseudo-Hermiticity.
pub const CERTIFY_RESIDUAL: f64 = 1e-8;
/// Largest matrix handed to the least-squares metric solve.
pub const NUMERICAL_METRIC_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricFamily {
    /// Continuous limit with `J = α + iβ`, `h = α - iβ`.
    ContinuousConjugate,
    /// `α_J = α_h = π/4 mod π/2`, metric `σ_x`.
    DualUnitary,
    Hermitian,
    Numerical,
}

#[derive(Debug, Clone)]
pub struct MetricOperator {
    pub eta: Array2<C64>,
    /// `‖η H η⁻¹ - H†‖ / ‖H‖`.
    pub residual: f64,
    pub family: MetricFamily,
    pub certified: bool,
}

pub enum MetricTarget<'a> {
    /// Continuous-time Bloch Hamiltonian.
    Continuous { j: C64, h: C64, k: f64 },
    /// Floquet Bloch Hamiltonian `i Log U_k`.
    Floquet { params: &'a ModelParams, k: f64 },
    Matrix(&'a Array2<C64>),
}

fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn metric_residual(eta: &Array2<C64>, h: &Array2<C64>) -> Result<f64> {
    let hn = fro(h);
    if hn == 0.0 {
        return Ok(0.0);
    }
    let lhs = eta.dot(h).dot(&inv(eta)?);
    Ok(fro(&(&lhs - &dagger(h))) / hn)
}

fn finish(eta: Array2<C64>, h: &Array2<C64>, family: MetricFamily, certify: bool) -> Result<MetricOperator> {
    let residual = metric_residual(&eta, h).unwrap_or(f64::INFINITY);
    Ok(MetricOperator { eta, residual, family, certified: certify && residual < CERTIFY_RESIDUAL })
}

/// Real parts closer than this to -π are moved to +π.
const BRANCH_SNAP: f64 = 1e-9;

/// `H_F = i Log U_k` with eigenvalues folded to (-π, π]. A π pair `±π + iγ`
/// lands on one side of the cut so it stays a conjugate pair.
pub fn floquet_bloch_hamiltonian(j: C64, h: C64, k: f64) -> Result<Array2<C64>> {
    let u = floquet_bloch(j, h, k);
    let (mu, v) = eig(&u)?;
    let snap = |e: C64| if e.re < -PI + BRANCH_SNAP { e + 2.0 * PI } else { e };
    let eps = Array2::from_diag(&mu.mapv(|m| snap(fold(C64::i() * m.ln()))));
    Ok(v.dot(&eps).dot(&inv(&v)?))
}

/// Closed-form metric `[[1, g], [g, 1]]` with `g = (β/α) cot(k/2)`.
pub fn continuous_conjugate_metric(alpha: f64, beta: f64, k: f64) -> Result<MetricOperator> {
    let half = 0.5 * k;
    if half.sin().abs() < 1e-12 {
        return Err(Error::Pole(format!("cot(k/2) diverges at k = {k}")));
    }
    if alpha == 0.0 {
        return Err(Error::Pole("beta/alpha diverges at alpha = 0".into()));
    }
    let g = c(beta / alpha * half.cos() / half.sin(), 0.0);
    let eta = array![[c(1.0, 0.0), g], [g, c(1.0, 0.0)]];
    let hk = continuous_bloch(c(alpha, beta), c(alpha, -beta), k);
    finish(eta, &hk, MetricFamily::ContinuousConjugate, true)
}

/// Least-squares Hermitian solution of `η H = H† η`, reported without certification.
pub fn numerical_metric(h: &Array2<C64>) -> Result<MetricOperator> {
    let n = h.nrows();
    if n > NUMERICAL_METRIC_LIMIT {
        return Err(Error::Capacity { what: format!("numerical metric of size {n}"), limit: NUMERICAL_METRIC_LIMIT });
    }
    let idx = |a: usize, b: usize| a + n * b;
    let mut a = Array2::<C64>::zeros((n * n, n * n));
    for r in 0..n {
        for col in 0..n {
            for y in 0..n {
                a[[idx(r, col), idx(r, y)]] += h[[y, col]];
            }
            for x in 0..n {
                a[[idx(r, col), idx(x, col)]] -= h[[x, r]].conj();
            }
        }
    }
    let (_, _, vt) = a.svd(false, true)?;
    let vt = vt.ok_or_else(|| Error::NumericalBreakdown { reason: "SVD returned no vectors".into(), condition: f64::INFINITY })?;
    let last: Array1<C64> = vt.row(n * n - 1).mapv(|z| z.conj());
    let raw = Array2::from_shape_fn((n, n), |(r, col)| last[idx(r, col)]);
    let herm = (&raw + &dagger(&raw)).mapv(|z| z * 0.5);
    let anti = (&raw - &dagger(&raw)).mapv(|z| z * c(0.0, 0.5));
    let eta = if fro(&herm) >= fro(&anti) { herm } else { anti };
    let scale = fro(&eta);
    finish(eta.mapv(|z| z / scale), h, MetricFamily::Numerical, false)
}

pub fn pseudo_hermiticity_certificate(target: MetricTarget<'_>) -> Result<MetricOperator> {
    match target {
        MetricTarget::Continuous { j, h, k } => {
            let hk = continuous_bloch(j, h, k);
            if j.im == 0.0 && h.im == 0.0 {
                finish(eye(2), &hk, MetricFamily::Hermitian, true)
            } else if (j.re - h.re).abs() < 1e-14 && (j.im + h.im).abs() < 1e-14 {
                continuous_conjugate_metric(j.re, j.im, k)
            } else {
                numerical_metric(&hk)
            }
        }
        MetricTarget::Floquet { params, k } => {
            let hk = floquet_bloch_hamiltonian(params.j(), params.h(), k)?;
            if params.flags.unitary {
                finish(eye(2), &hk, MetricFamily::Hermitian, true)
            } else if params.flags.dual_unitary_line {
                let sx = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
                finish(sx, &hk, MetricFamily::DualUnitary, true)
            } else {
                numerical_metric(&hk)
            }
        }
        MetricTarget::Matrix(h) => {
            if h.nrows() != h.ncols() {
                return invalid("metric target must be square");
            }
            if fro(&(h - &dagger(h))) <= 1e-12 * fro(h).max(1.0) {
                finish(eye(h.nrows()), h, MetricFamily::Hermitian, true)
            } else {
                numerical_metric(h)
            }
        }
    }
}

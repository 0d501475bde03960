//! Dense complex helpers on top of LAPACK.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eig, Eigh, Inverse, Norm, QR, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> Array2<C64> {
    Array2::eye(n)
}

/// Largest entry modulus.
pub fn max_abs(a: ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Right eigenpairs of a general complex matrix. Columns of the second
/// output are unit-norm eigenvectors.
pub fn eig(a: &Array2<C64>) -> Result<(Array1<C64>, Array2<C64>)> {
    if a.iter().any(|z| !z.is_finite()) {
        return Err(Error::NumericalBreakdown { reason: "non-finite matrix passed to eig".into(), condition: f64::INFINITY });
    }
    Ok(a.eig()?)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eigvalsh(a: &Array2<C64>) -> Result<Array1<f64>> {
    let (w, _) = a.eigh(UPLO::Upper)?;
    Ok(w)
}

/// Eigenpairs of a Hermitian matrix.
pub fn eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    Ok(a.eigh(UPLO::Upper)?)
}

pub fn singular_values(a: &Array2<C64>) -> Result<Array1<f64>> {
    let (_, s, _) = a.svd(false, false)?;
    Ok(s)
}

/// Two-norm condition number.
pub fn cond2(a: &Array2<C64>) -> Result<f64> {
    let s = singular_values(a)?;
    let (hi, lo) = (s[0], s[s.len() - 1]);
    Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
}

pub fn inv(a: &Array2<C64>) -> Result<Array2<C64>> {
    Ok(a.inv()?)
}

/// Reduced QR of a tall matrix: `a = q r` with `q` n×k orthonormal.
pub fn thin_qr(a: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let (q, r) = a.qr()?;
    let k = a.ncols().min(a.nrows());
    Ok((q.slice(s![.., ..k]).to_owned(), r.slice(s![..k, ..]).to_owned()))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &Array2<C64>) -> f64 {
    a.axis_iter(Axis(1)).map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    let nrm = norm1(a);
    if !nrm.is_finite() {
        return Err(Error::NumericalBreakdown { reason: "non-finite matrix passed to expm".into(), condition: nrm });
    }
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.mapv(|z| z / 2f64.powi(s));
    let id = eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = |i: usize| C64::from(PADE13[i]);
    let u_inner = a6.dot(&(&a6 * b(13) + &a4 * b(11) + &a2 * b(9))) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = a.dot(&u_inner);
    let v = a6.dot(&(&a6 * b(12) + &a4 * b(10) + &a2 * b(8))) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let mut r = inv(&(&v - &u))?.dot(&(&v + &u));
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Frobenius norm.
pub fn fro(a: &Array2<C64>) -> f64 {
    a.norm_l2()
}

/// Greedy nearest-neighbour matching of two equal-size multisets; returns
/// the largest matched distance, or infinity when sizes differ.
pub fn match_multisets<T: Copy>(a: &[T], b: &[T], dist: impl Fn(T, T) -> f64) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for &x in a {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, &y) in b.iter().enumerate() {
            if !used[j] {
                let d = dist(x, y);
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        if best.1 == usize::MAX {
            return f64::INFINITY;
        }
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    worst
}

/// Ordinary least squares for `y ≈ X β` via the normal equations on a small design.
pub fn lstsq(x: &Array2<f64>, y: &Array1<f64>) -> Option<Array1<f64>> {
    let xtx = x.t().dot(x);
    let xty = x.t().dot(y);
    let p = xtx.nrows();
    let mut aug = Array2::<f64>::zeros((p, p + 1));
    aug.slice_mut(s![.., ..p]).assign(&xtx);
    aug.column_mut(p).assign(&xty);
    let scale = xtx.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| aug[[i, col]].abs().total_cmp(&aug[[j, col]].abs()))?;
        if aug[[piv, col]].abs() < 1e-12 * scale {
            return None;
        }
        for k in 0..=p {
            aug.swap([col, k], [piv, k]);
        }
        for row in 0..p {
            if row != col {
                let f = aug[[row, col]] / aug[[col, col]];
                for k in col..=p {
                    aug[[row, k]] -= f * aug[[col, k]];
                }
            }
        }
    }
    Some(Array1::from_iter((0..p).map(|i| aug[[i, p]] / aug[[i, i]])))
}

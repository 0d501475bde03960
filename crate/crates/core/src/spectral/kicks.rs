use ndarray::{Array2, ArrayViewMut2};

use crate::error::{invalid, Result};
use crate::linalg::{expm, C64};
use crate::model::{BoundaryCondition, LatticeSpec, ModelParams};

/// Antisymmetric Majorana form `W` of `H = i Σ a_j W_jk a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub w: Array2<C64>,
}

impl QuadraticForm {
    /// Antisymmetrizes `w` on construction.
    pub fn new(w: Array2<C64>) -> Result<Self> {
        if w.nrows() != w.ncols() || w.nrows() % 2 != 0 {
            return invalid(format!("quadratic form must be square of even size, got {:?}", w.dim()));
        }
        let w = (&w - &w.t()).mapv(|z| z * 0.5);
        Ok(QuadraticForm { w })
    }

    pub fn zeros(modes: usize) -> Self {
        QuadraticForm { w: Array2::zeros((modes, modes)) }
    }

    pub fn modes(&self) -> usize {
        self.w.nrows()
    }

    /// Single-particle Hamiltonian matrix `H_jk = i W_jk`.
    pub fn hamiltonian(&self) -> Array2<C64> {
        self.w.mapv(|z| z * C64::i())
    }

    /// Nonzero upper entries as bonds, if every mode sits in at most one of them.
    pub fn disjoint_bonds(&self) -> Option<Kick> {
        let n = self.modes();
        let mut used = vec![false; n];
        let mut bonds = Vec::new();
        for p in 0..n {
            for q in p + 1..n {
                let w = self.w[[p, q]];
                if w != C64::new(0.0, 0.0) {
                    if used[p] || used[q] {
                        return None;
                    }
                    used[p] = true;
                    used[q] = true;
                    bonds.push(Bond { p, q, w });
                }
            }
        }
        Some(Kick { modes: n, bonds })
    }

    /// `exp(4W)`: exact per bond when bonds are disjoint, Padé otherwise.
    pub fn exp4(&self) -> Result<Array2<C64>> {
        match self.disjoint_bonds() {
            Some(k) => Ok(k.exp4_dense()),
            None => expm(&self.w.mapv(|z| z * 4.0)),
        }
    }
}

/// `W_pq = w = -W_qp` on modes `p`, `q` (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub p: usize,
    pub q: usize,
    pub w: C64,
}

/// A kick built from mutually commuting bonds.
#[derive(Debug, Clone, PartialEq)]
pub struct Kick {
    pub modes: usize,
    pub bonds: Vec<Bond>,
}

impl Kick {
    pub fn form(&self) -> QuadraticForm {
        let mut w = Array2::zeros((self.modes, self.modes));
        for b in &self.bonds {
            w[[b.p, b.q]] += b.w;
            w[[b.q, b.p]] -= b.w;
        }
        QuadraticForm { w }
    }

    /// `rows ← exp(4W) rows`, one 2×2 rotation per bond.
    pub fn apply_exp4(&self, mut v: ArrayViewMut2<C64>) {
        for b in &self.bonds {
            let (cs, sn) = ((b.w * 4.0).cos(), (b.w * 4.0).sin());
            for col in 0..v.ncols() {
                let (x, y) = (v[[b.p, col]], v[[b.q, col]]);
                v[[b.p, col]] = cs * x + sn * y;
                v[[b.q, col]] = cs * y - sn * x;
            }
        }
    }

    pub fn exp4_dense(&self) -> Array2<C64> {
        let mut m = Array2::eye(self.modes);
        self.apply_exp4(m.view_mut());
        m
    }
}

/// The two kicks of one drive period.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetKicks {
    /// Ising kick, `W'` on bonds `(2j, 2j+1)`.
    pub bond: Kick,
    /// Field kick, `W''` on sites `(2j-1, 2j)`.
    pub field: Kick,
}

impl FloquetKicks {
    pub fn new(p: &ModelParams, lat: &LatticeSpec) -> Self {
        let n = lat.modes();
        let half = C64::new(0.5, 0.0);
        let field = Kick {
            modes: n,
            bonds: (0..lat.sites).map(|j| Bond { p: 2 * j, q: 2 * j + 1, w: -p.h() * half }).collect(),
        };
        let mut bonds: Vec<Bond> =
            (0..lat.sites - 1).map(|j| Bond { p: 2 * j + 1, q: 2 * j + 2, w: -p.j() * half }).collect();
        let wrap = match lat.bc {
            BoundaryCondition::PeriodicEven => Some(1.0),
            BoundaryCondition::PeriodicOdd => Some(-1.0),
            BoundaryCondition::Open => None,
        };
        if let Some(parity) = wrap {
            bonds.push(Bond { p: n - 1, q: 0, w: p.j() * half * parity });
        }
        FloquetKicks { bond: Kick { modes: n, bonds }, field }
    }

    /// `rows ← M rows` with `M = exp(4W') exp(4W'')`.
    pub fn apply(&self, mut v: ArrayViewMut2<C64>) {
        self.field.apply_exp4(v.view_mut());
        self.bond.apply_exp4(v);
    }

    pub fn transfer_dense(&self) -> Array2<C64> {
        let mut m = Array2::eye(self.field.modes);
        self.apply(m.view_mut());
        m
    }
}

/// `(W', W'')` for one period.
pub fn build_kick_forms(p: &ModelParams, lat: &LatticeSpec) -> (QuadraticForm, QuadraticForm) {
    let k = FloquetKicks::new(p, lat);
    (k.bond.form(), k.field.form())
}

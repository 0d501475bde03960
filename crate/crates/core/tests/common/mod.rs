#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nhtfim::gaussian::GaussianFrame;
use nhtfim::linalg::C64;
use nhtfim::oracle::{apply_floquet_period, SpinState};
use nhtfim::model::Basis;
use nhtfim::spectral::FloquetKicks;
use nhtfim::{BoundaryCondition, LatticeSpec, ModelParams, Units};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Complex couplings with |α| ≤ π/2 and |β| ≤ 1.5·π/4 (radians).
pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let a = |r: &mut ChaCha8Rng| r.gen_range(-FRAC_PI_2..FRAC_PI_2);
    let b = |r: &mut ChaCha8Rng| r.gen_range(-1.5 * FRAC_PI_4..1.5 * FRAC_PI_4);
    let (aj, bj, ah, bh) = (a(rng), b(rng), a(rng), b(rng));
    ModelParams::new(aj, bj, ah, bh, Units::Radians).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_signs(rng: &mut ChaCha8Rng, l: usize) -> Vec<i8> {
    (0..l).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
}

/// Fermion sector matching a Z-basis product state on a periodic chain.
pub fn sector(signs: &[i8]) -> BoundaryCondition {
    if signs.iter().filter(|&&s| s < 0).count() % 2 == 0 {
        BoundaryCondition::PeriodicEven
    } else {
        BoundaryCondition::PeriodicOdd
    }
}

/// Paired engine and oracle runs from the same Z-basis product state.
pub struct Twin {
    pub frame: GaussianFrame,
    pub psi: SpinState,
    pub kicks: FloquetKicks,
    pub p: ModelParams,
    pub spin_lat: LatticeSpec,
    pub oracle_log_norm: f64,
}

impl Twin {
    pub fn new(p: ModelParams, signs: &[i8], periodic: bool) -> Self {
        let l = signs.len();
        let (spin_bc, fermion_bc) =
            if periodic { (BoundaryCondition::PeriodicEven, sector(signs)) } else { (BoundaryCondition::Open, BoundaryCondition::Open) };
        let spin_lat = LatticeSpec::new(l, spin_bc).unwrap();
        let kicks = FloquetKicks::new(&p, &LatticeSpec::new(l, fermion_bc).unwrap());
        Twin {
            frame: GaussianFrame::from_z_signs(signs),
            psi: SpinState::product(Basis::Z, signs).unwrap(),
            kicks,
            p,
            spin_lat,
            oracle_log_norm: 0.0,
        }
    }

    pub fn step(&mut self) {
        self.frame.step(&self.kicks).unwrap();
        self.oracle_log_norm += apply_floquet_period(&mut self.psi, &self.p, &self.spin_lat, 0.0).unwrap().ln();
    }
}

pub fn max_diff(a: &ndarray::Array2<C64>, b: &ndarray::Array2<C64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

//! Parameters, lattices and initial states of the kicked Ising chain
//!
//! One drive period applies `U_F = exp(i J Σ X_j X_{j+1}) exp(i h Σ Z_j)` with
//! complex `J = α_J + i β_J` and `h = α_h + i β_h`. Everything downstream reads
//! its couplings from [`ModelParams`], which always stores raw radians.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Points closer than this (raw radians) to a critical line count as on it.
pub const CRITICAL_TIE_TOL: f64 = 1e-12;

/// Unit convention for coupling inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    /// Inputs are multiples of π/4.
    Pi4,
    Radians,
}

impl Units {
    pub fn factor(self) -> f64 {
        match self {
            Units::Pi4 => FRAC_PI_4,
            Units::Radians => 1.0,
        }
    }

    pub fn to_raw(self, x: f64) -> f64 {
        x * self.factor()
    }

    pub fn from_raw(self, x: f64) -> f64 {
        x / self.factor()
    }
}

impl FromStr for Units {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pi4" => Ok(Units::Pi4),
            "rad" => Ok(Units::Radians),
            other => invalid(format!("units must be `pi4` or `rad`, got `{other}`")),
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Pi4 => "pi4",
            Units::Radians => "rad",
        })
    }
}

/// Special cases worth knowing about, derived once at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParamFlags {
    /// α_J = α_h, the plane covered by the phase diagram.
    pub equal_alpha: bool,
    /// α_J = α_h = π/4 mod π/2 (spacetime dual of a unitary circuit).
    pub dual_unitary_line: bool,
    /// |J| = |h| = π/4.
    pub self_dual_point: bool,
    /// J = h = 0, so U_F is the identity.
    pub identity: bool,
    /// β_J = β_h = 0.
    pub unitary: bool,
}

/// Complex couplings in raw radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha_j: f64,
    pub beta_j: f64,
    pub alpha_h: f64,
    pub beta_h: f64,
    pub flags: ParamFlags,
}

fn near_mod(x: f64, period: f64, offset: f64) -> bool {
    let r = (x - offset).rem_euclid(period);
    r < CRITICAL_TIE_TOL || period - r < CRITICAL_TIE_TOL
}

impl ModelParams {
    /// Builds canonical parameters; `units` says how the four inputs are scaled.
    pub fn new(alpha_j: f64, beta_j: f64, alpha_h: f64, beta_h: f64, units: Units) -> Result<Self> {
        for (name, v) in [("alpha_J", alpha_j), ("beta_J", beta_j), ("alpha_h", alpha_h), ("beta_h", beta_h)] {
            if !v.is_finite() {
                return invalid(format!("{name} must be finite, got {v}"));
            }
        }
        let mut p = ModelParams {
            alpha_j: units.to_raw(alpha_j),
            beta_j: units.to_raw(beta_j),
            alpha_h: units.to_raw(alpha_h),
            beta_h: units.to_raw(beta_h),
            flags: ParamFlags::default(),
        };
        p.flags = p.derive_flags();
        Ok(p)
    }

    /// Shorthand for the α_J = α_h plane.
    pub fn on_plane(alpha: f64, beta_j: f64, beta_h: f64, units: Units) -> Result<Self> {
        Self::new(alpha, beta_j, alpha, beta_h, units)
    }

    /// Builds from complex couplings given in raw radians.
    pub fn from_complex(j: Complex64, h: Complex64) -> Result<Self> {
        Self::new(j.re, j.im, h.re, h.im, Units::Radians)
    }

    fn derive_flags(&self) -> ParamFlags {
        let equal_alpha = (self.alpha_j - self.alpha_h).abs() < CRITICAL_TIE_TOL;
        let quarter = |a: f64| near_mod(a, FRAC_PI_2, FRAC_PI_4);
        ParamFlags {
            equal_alpha,
            dual_unitary_line: equal_alpha && quarter(self.alpha_j),
            self_dual_point: (self.j().norm() - FRAC_PI_4).abs() < CRITICAL_TIE_TOL
                && (self.h().norm() - FRAC_PI_4).abs() < CRITICAL_TIE_TOL,
            identity: self.j().norm() == 0.0 && self.h().norm() == 0.0,
            unitary: self.beta_j == 0.0 && self.beta_h == 0.0,
        }
    }

    pub fn j(&self) -> Complex64 {
        Complex64::new(self.alpha_j, self.beta_j)
    }

    pub fn h(&self) -> Complex64 {
        Complex64::new(self.alpha_h, self.beta_h)
    }

    /// `[α_J, β_J, α_h, β_h]` expressed in `units`.
    pub fn in_units(&self, units: Units) -> [f64; 4] {
        [self.alpha_j, self.beta_j, self.alpha_h, self.beta_h].map(|x| units.from_raw(x))
    }
}

/// Fermion parity sector of a periodic chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// Periodic spins, even fermion parity: antiperiodic fermions.
    PeriodicEven,
    /// Periodic spins, odd fermion parity: periodic fermions.
    PeriodicOdd,
    Open,
}

impl BoundaryCondition {
    pub fn parity_sector(self) -> Option<Parity> {
        match self {
            BoundaryCondition::PeriodicEven => Some(Parity::Even),
            BoundaryCondition::PeriodicOdd => Some(Parity::Odd),
            BoundaryCondition::Open => None,
        }
    }

    pub fn is_periodic(self) -> bool {
        !matches!(self, BoundaryCondition::Open)
    }

    pub fn periodic(parity: Parity) -> Self {
        match parity {
            Parity::Even => BoundaryCondition::PeriodicEven,
            Parity::Odd => BoundaryCondition::PeriodicOdd,
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pbc-even" => Ok(BoundaryCondition::PeriodicEven),
            "pbc-odd" => Ok(BoundaryCondition::PeriodicOdd),
            "obc" => Ok(BoundaryCondition::Open),
            other => invalid(format!("bc must be pbc-even, pbc-odd or obc, got `{other}`")),
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryCondition::PeriodicEven => "pbc-even",
            BoundaryCondition::PeriodicOdd => "pbc-odd",
            BoundaryCondition::Open => "obc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub sites: usize,
    pub bc: BoundaryCondition,
}

impl LatticeSpec {
    pub fn new(sites: usize, bc: BoundaryCondition) -> Result<Self> {
        if sites < 2 {
            return invalid(format!("need at least 2 sites, got {sites}"));
        }
        Ok(LatticeSpec { sites, bc })
    }

    /// Number of Majorana modes, 2L.
    pub fn modes(&self) -> usize {
        2 * self.sites
    }
}

/// A contiguous block of sites, `start` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemSpec {
    pub start: usize,
    pub len: usize,
}

impl SubsystemSpec {
    pub fn new(start: usize, len: usize) -> Self {
        SubsystemSpec { start, len }
    }

    /// The block centred in the chain.
    pub fn centered(sites: usize, len: usize) -> Self {
        SubsystemSpec { start: (sites - len) / 2 + 1, len }
    }

    /// 0-based site indices. Wraps around only on periodic lattices.
    pub fn site_indices(&self, lat: &LatticeSpec) -> Result<Vec<usize>> {
        let l = lat.sites;
        if self.len == 0 || self.start == 0 || self.start > l || self.len > l {
            return invalid(format!("subsystem start={} len={} outside lattice of {l} sites", self.start, self.len));
        }
        if self.start + self.len - 1 > l && !lat.bc.is_periodic() {
            return invalid("subsystem wraps around an open chain");
        }
        Ok((0..self.len).map(|i| (self.start - 1 + i) % l).collect())
    }
}

/// Four contiguous segments covering an open chain. Along the chain they sit in
/// the order A, B, D, C, so A and C hold the two ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeePartition {
    pub lengths: [usize; 4],
}

impl TeePartition {
    pub fn new(lengths: [usize; 4], sites: usize) -> Result<Self> {
        if lengths.iter().any(|&n| n == 0) {
            return invalid("TEE segments must be non-empty");
        }
        if lengths.iter().sum::<usize>() != sites {
            return invalid(format!("TEE segment lengths {lengths:?} do not sum to L = {sites}"));
        }
        Ok(TeePartition { lengths })
    }

    pub fn quarters(sites: usize) -> Result<Self> {
        if sites % 4 != 0 {
            return invalid(format!("equal quarters need L divisible by 4, got {sites}"));
        }
        Self::new([sites / 4; 4], sites)
    }

    /// 0-based site range of segment `i` (0 = A, 1 = B, 2 = C, 3 = D).
    pub fn segment(&self, i: usize) -> std::ops::Range<usize> {
        let [a, b, c, d] = self.lengths;
        match i {
            0 => 0..a,
            1 => a..a + b,
            2 => a + b + d..a + b + d + c,
            3 => a + b..a + b + d,
            _ => panic!("TEE segment index {i} out of range"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

/// Product initial states. Signs are ±1 eigenvalues of the basis Pauli.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialState {
    /// Odd sites occupied, even sites empty: Z = -1, +1, -1, ...
    NeelFermion,
    AllUp(Basis),
    AllDown(Basis),
    /// +1, -1, +1, ... starting at site 1.
    Antiferro(Basis),
    Custom { basis: Basis, signs: Vec<i8> },
    /// Independent random ±1 per site from a seeded generator.
    Random { basis: Basis, seed: u64 },
}

impl InitialState {
    /// Resolves to a basis and one sign per site.
    pub fn product_signs(&self, sites: usize) -> Result<(Basis, Vec<i8>)> {
        let alt = |first: i8| (0..sites).map(|i| if i % 2 == 0 { first } else { -first }).collect::<Vec<_>>();
        Ok(match self {
            InitialState::NeelFermion => (Basis::Z, alt(-1)),
            InitialState::AllUp(b) => (*b, vec![1; sites]),
            InitialState::AllDown(b) => (*b, vec![-1; sites]),
            InitialState::Antiferro(b) => (*b, alt(1)),
            InitialState::Custom { basis, signs } => {
                if signs.len() != sites {
                    return invalid(format!("custom state has {} signs for {sites} sites", signs.len()));
                }
                if signs.iter().any(|&s| s != 1 && s != -1) {
                    return invalid("custom state signs must be +1 or -1");
                }
                (*basis, signs.clone())
            }
            InitialState::Random { basis, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (*basis, (0..sites).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
            }
        })
    }

    /// Fermion parity of a Z-basis product state (number of Z = -1 sites).
    pub fn fermion_parity(&self, sites: usize) -> Result<Parity> {
        let (basis, signs) = self.product_signs(sites)?;
        if basis != Basis::Z {
            return Err(Error::Unsupported("X-basis product states have no definite fermion parity".into()));
        }
        let occupied = signs.iter().filter(|&&s| s < 0).count();
        Ok(if occupied % 2 == 0 { Parity::Even } else { Parity::Odd })
    }
}

impl FromStr for InitialState {
    type Err = Error;

    /// `neel`, `all-up[:x]`, `all-down[:x]`, `antiferro[:x]`,
    /// `custom:<z|x>:+-+-...`, `random:<z|x>:<seed>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let basis = |p: Option<&str>| -> Result<Basis> {
            match p {
                None | Some("z") => Ok(Basis::Z),
                Some("x") => Ok(Basis::X),
                Some(o) => invalid(format!("basis must be z or x, got `{o}`")),
            }
        };
        let state = match head {
            "neel" => InitialState::NeelFermion,
            "all-up" => InitialState::AllUp(basis(parts.next())?),
            "all-down" => InitialState::AllDown(basis(parts.next())?),
            "antiferro" => InitialState::Antiferro(basis(parts.next())?),
            "custom" => {
                let b = basis(parts.next())?;
                let pattern = parts.next().unwrap_or_default();
                let signs = pattern
                    .chars()
                    .map(|c| match c {
                        '+' => Ok(1),
                        '-' => Ok(-1),
                        o => invalid(format!("custom pattern accepts only + and -, got `{o}`")),
                    })
                    .collect::<Result<Vec<i8>>>()?;
                if signs.is_empty() {
                    return invalid("custom pattern is empty");
                }
                InitialState::Custom { basis: b, signs }
            }
            "random" => {
                let b = basis(parts.next())?;
                let seed = parts
                    .next()
                    .ok_or_else(|| Error::Validation("random state needs a seed".into()))?
                    .parse::<u64>()
                    .map_err(|e| Error::Validation(format!("bad seed: {e}")))?;
                InitialState::Random { basis: b, seed }
            }
            other => return invalid(format!("unknown initial_state `{other}`")),
        };
        if parts.next().is_some() {
            return invalid(format!("trailing fields in initial_state `{s}`"));
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchConfig {
    pub initial: InitialState,
    pub n_periods: usize,
    /// Longitudinal field K in raw radians (spin simulator only).
    pub k_field: f64,
}

impl QuenchConfig {
    pub fn new(initial: InitialState, n_periods: usize) -> Self {
        QuenchConfig { initial, n_periods, k_field: 0.0 }
    }

    pub fn with_k(mut self, k_field: f64) -> Self {
        self.k_field = k_field;
        self
    }
}

/// Steady-state phases of the α_J = α_h plane, labelled by edge modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseLabel {
    /// No edge modes.
    Trivial,
    ZeroMode,
    PiMode,
    ZeroPi,
    CriticalVolume,
    CriticalLog,
    Ambiguous,
}

impl PhaseLabel {
    pub fn is_critical(self) -> bool {
        matches!(self, PhaseLabel::CriticalVolume | PhaseLabel::CriticalLog)
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseLabel::Trivial => "trivial",
            PhaseLabel::ZeroMode => "0",
            PhaseLabel::PiMode => "pi",
            PhaseLabel::ZeroPi => "0pi",
            PhaseLabel::CriticalVolume => "critical-volume",
            PhaseLabel::CriticalLog => "critical-log",
            PhaseLabel::Ambiguous => "ambiguous",
        })
    }
}

/// Folds α into [0, π/2] using the period-π and α → -α symmetries.
pub fn reduced_alpha(alpha: f64) -> f64 {
    let r = alpha.rem_euclid(PI);
    if r > FRAC_PI_2 {
        PI - r
    } else {
        r
    }
}

/// Phase of a point on the α_J = α_h plane, read off from the inequalities
/// that bound the four quadrants.
pub fn phase_label_from_params(p: &ModelParams) -> Result<PhaseLabel> {
    if !p.flags.equal_alpha {
        return Err(Error::Unsupported(
            "closed-form phase labels exist only for alpha_J = alpha_h; classify from the spectrum instead".into(),
        ));
    }
    let a = reduced_alpha(p.alpha_j);
    let on_quarter = (a - FRAC_PI_4).abs() < CRITICAL_TIE_TOL;
    let on_zero = a < CRITICAL_TIE_TOL || FRAC_PI_2 - a < CRITICAL_TIE_TOL;
    let anti = (p.beta_j + p.beta_h).abs() < CRITICAL_TIE_TOL;
    let same = (p.beta_j - p.beta_h).abs() < CRITICAL_TIE_TOL;

    if on_quarter {
        return Ok(PhaseLabel::CriticalVolume);
    }
    if anti {
        // At α ≡ 0 mod π/2 the pseudo-Hermitian volume line degenerates to a log point.
        return Ok(if on_zero { PhaseLabel::CriticalLog } else { PhaseLabel::CriticalVolume });
    }
    if same {
        return Ok(PhaseLabel::CriticalLog);
    }
    let strong_bond = p.beta_j.abs() > p.beta_h.abs();
    Ok(match (a < FRAC_PI_4, strong_bond) {
        (true, false) => PhaseLabel::Trivial,
        (true, true) => PhaseLabel::ZeroMode,
        (false, true) => PhaseLabel::PiMode,
        (false, false) => PhaseLabel::ZeroPi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(a: f64, bj: f64, bh: f64) -> ModelParams {
        ModelParams::on_plane(a, bj, bh, Units::Pi4).unwrap()
    }

    #[test]
    fn pi4_units_scale_inputs() {
        let p = ModelParams::new(0.2, -0.1, 0.2, 0.1, Units::Pi4).unwrap();
        assert!((p.j() - Complex64::new(0.05 * PI, -0.025 * PI)).norm() < 1e-15);
        assert!((p.h() - Complex64::new(0.05 * PI, 0.025 * PI)).norm() < 1e-15);
        assert!(p.flags.equal_alpha);
    }

    #[test]
    fn self_dual_point_is_flagged() {
        let p = ModelParams::new(1.0, 0.0, 1.0, 0.0, Units::Pi4).unwrap();
        assert_eq!(p.j(), Complex64::new(FRAC_PI_4, 0.0));
        assert!(p.flags.self_dual_point && p.flags.dual_unitary_line && p.flags.unitary);
    }

    #[test]
    fn zero_couplings_flag_identity() {
        let p = ModelParams::new(0.0, 0.0, 0.0, 0.0, Units::Radians).unwrap();
        assert!(p.flags.identity);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(ModelParams::new(f64::NAN, 0.0, 0.0, 0.0, Units::Radians).is_err());
        assert!(ModelParams::new(0.0, f64::INFINITY, 0.0, 0.0, Units::Pi4).is_err());
    }

    #[test]
    fn figure_seven_rows() {
        assert_eq!(phase_label_from_params(&plane(0.5, -0.5, 1.5)).unwrap(), PhaseLabel::Trivial);
        assert_eq!(phase_label_from_params(&plane(0.5, -1.5, 0.5)).unwrap(), PhaseLabel::ZeroMode);
        assert_eq!(phase_label_from_params(&plane(1.5, -1.5, 0.5)).unwrap(), PhaseLabel::PiMode);
        assert_eq!(phase_label_from_params(&plane(1.5, -0.1, 0.5)).unwrap(), PhaseLabel::ZeroPi);
    }

    #[test]
    fn critical_lines() {
        assert_eq!(phase_label_from_params(&plane(0.2, -0.1, 0.1)).unwrap(), PhaseLabel::CriticalVolume);
        assert_eq!(phase_label_from_params(&plane(0.2, 0.1, 0.1)).unwrap(), PhaseLabel::CriticalLog);
        assert_eq!(phase_label_from_params(&plane(1.0, 0.7, -0.3)).unwrap(), PhaseLabel::CriticalVolume);
        assert_eq!(phase_label_from_params(&plane(0.0, -0.3, 0.3)).unwrap(), PhaseLabel::CriticalLog);
    }

    #[test]
    fn unequal_alpha_unsupported() {
        let p = ModelParams::new(0.2, 0.1, 0.3, 0.1, Units::Pi4).unwrap();
        assert!(matches!(phase_label_from_params(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn labels_respect_alpha_symmetries() {
        for &(a, bj, bh) in &[(0.5, -1.5, 0.5), (1.5, -0.1, 0.5), (0.3, 0.2, -0.6)] {
            let base = phase_label_from_params(&plane(a, bj, bh)).unwrap();
            assert_eq!(phase_label_from_params(&plane(-a, bj, bh)).unwrap(), base);
            assert_eq!(phase_label_from_params(&plane(a + 4.0, bj, bh)).unwrap(), base);
        }
    }

    #[test]
    fn initial_state_parsing() {
        assert_eq!("neel".parse::<InitialState>().unwrap(), InitialState::NeelFermion);
        assert_eq!("all-down:x".parse::<InitialState>().unwrap(), InitialState::AllDown(Basis::X));
        let c: InitialState = "custom:z:+-+".parse().unwrap();
        assert_eq!(c.product_signs(3).unwrap().1, vec![1, -1, 1]);
        assert!(c.product_signs(4).is_err());
        assert!("custom:z:+0".parse::<InitialState>().is_err());
        assert!("random:x".parse::<InitialState>().is_err());
        assert!("bogus".parse::<InitialState>().is_err());
    }

    #[test]
    fn neel_parity_follows_half_filling() {
        assert_eq!(InitialState::NeelFermion.fermion_parity(4).unwrap(), Parity::Even);
        assert_eq!(InitialState::NeelFermion.fermion_parity(6).unwrap(), Parity::Odd);
        assert!(InitialState::AllUp(Basis::X).fermion_parity(4).is_err());
    }

    #[test]
    fn subsystem_bounds() {
        let obc = LatticeSpec::new(8, BoundaryCondition::Open).unwrap();
        let pbc = LatticeSpec::new(8, BoundaryCondition::PeriodicEven).unwrap();
        assert_eq!(SubsystemSpec::new(7, 2).site_indices(&obc).unwrap(), vec![6, 7]);
        assert!(SubsystemSpec::new(7, 3).site_indices(&obc).is_err());
        assert_eq!(SubsystemSpec::new(7, 3).site_indices(&pbc).unwrap(), vec![6, 7, 0]);
        assert!(SubsystemSpec::new(0, 1).site_indices(&pbc).is_err());
        assert!(TeePartition::new([2, 2, 2, 1], 8).is_err());
        let q = TeePartition::new([1, 2, 3, 2], 8).unwrap();
        assert_eq!((q.segment(0), q.segment(1), q.segment(3), q.segment(2)), (0..1, 1..3, 3..5, 5..8));
    }

    proptest::proptest! {
        #[test]
        fn unit_round_trip(x in -10.0f64..10.0) {
            let back = Units::Pi4.from_raw(Units::Pi4.to_raw(x));
            proptest::prop_assert!((back - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0));
        }
    }
}

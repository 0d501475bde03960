//! `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Keys are case-sensitive and may
//! appear at most once.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::model::{
    BoundaryCondition, InitialState, LatticeSpec, ModelParams, QuenchConfig, SubsystemSpec, Units,
};

/// Keys the model itself understands.
pub const MODEL_KEYS: &[&str] = &[
    "alpha_J", "beta_J", "alpha_h", "beta_h", "units", "L", "bc", "n_periods", "K", "initial_state",
];

/// Keys consumed by individual subcommands on top of the model keys.
pub const EXTRA_KEYS: &[&str] = &["L_A", "sub_start", "seed", "tol_real", "tol_edge", "label"];

const MAX_LINE: usize = 4096;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let lineno = n + 1;
            if line.len() > MAX_LINE {
                return invalid(format!("line {lineno}: longer than {MAX_LINE} bytes"));
            }
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("line {lineno}: expected `key = value`")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return invalid(format!("line {lineno}: bad key `{k}`"));
            }
            if v.is_empty() {
                return invalid(format!("line {lineno}: empty value for `{k}`"));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return invalid(format!("line {lineno}: duplicate key `{k}`"));
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                let x: f64 = v.parse().map_err(|_| Error::Validation(format!("`{key}`: not a number: `{v}`")))?;
                if !x.is_finite() {
                    return invalid(format!("`{key}` must be finite"));
                }
                Ok(x)
            })
            .transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| Error::Validation(format!("`{key}`: not a non-negative integer: `{v}`"))))
            .transpose()
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| Error::Validation(format!("`{key}`: not a non-negative integer: `{v}`"))))
            .transpose()
    }

    /// Rejects keys outside `MODEL_KEYS`, `EXTRA_KEYS` and `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.keys() {
            if !MODEL_KEYS.contains(&k) && !EXTRA_KEYS.contains(&k) && !allowed.contains(&k) {
                return invalid(format!("unknown config key `{k}`"));
            }
        }
        Ok(())
    }

    /// Canonical text form: sorted keys, one per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}

/// A fully resolved model run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub units: Units,
    pub params: ModelParams,
    pub lattice: LatticeSpec,
    pub quench: QuenchConfig,
    pub subsystem: SubsystemSpec,
}

impl RunConfig {
    /// Defaults: `units = pi4`, `bc = obc`, `n_periods = 100`, `K = 0`,
    /// `initial_state = neel`, `L_A = L/10` (at least 1), centred block.
    /// `bc = pbc` picks the parity sector of a Z-basis initial state.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let units = raw.get("units").map(str::parse).transpose()?.unwrap_or(Units::Pi4);
        let need = |k: &str| raw.f64(k)?.ok_or_else(|| Error::Validation(format!("missing key `{k}`")));
        let alpha_j = need("alpha_J")?;
        let alpha_h = raw.f64("alpha_h")?.unwrap_or(alpha_j);
        let params = ModelParams::new(alpha_j, need("beta_J")?, alpha_h, need("beta_h")?, units)?;
        let sites = raw.usize("L")?.ok_or_else(|| Error::Validation("missing key `L`".into()))?;
        let initial: InitialState = raw.get("initial_state").unwrap_or("neel").parse()?;
        let bc = match raw.get("bc").unwrap_or("obc") {
            "pbc" => BoundaryCondition::periodic(initial.fermion_parity(sites)?),
            other => other.parse()?,
        };
        let lattice = LatticeSpec::new(sites, bc)?;
        initial.product_signs(sites)?;
        let n_periods = raw.usize("n_periods")?.unwrap_or(100);
        if n_periods == 0 {
            return invalid("n_periods must be positive");
        }
        let k_field = units.to_raw(raw.f64("K")?.unwrap_or(0.0));
        let len = raw.usize("L_A")?.unwrap_or((sites / 10).max(1));
        let subsystem = match raw.usize("sub_start")? {
            Some(start) => SubsystemSpec::new(start, len),
            None if len <= sites => SubsystemSpec::centered(sites, len),
            None => return invalid(format!("L_A = {len} exceeds L = {sites}")),
        };
        subsystem.site_indices(&lattice)?;
        Ok(RunConfig {
            units,
            params,
            lattice,
            quench: QuenchConfig::new(initial, n_periods).with_k(k_field),
            subsystem,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Basis;

    const SAMPLE: &str = "# fig 3 volume line\nalpha_J = 0.2\nalpha_h = 0.2\nbeta_J = -0.1  # bond\nbeta_h = 0.1\nL = 40\nbc = pbc\nn_periods = 20\n";

    #[test]
    fn parses_sample() {
        let raw = RawConfig::parse(SAMPLE).unwrap();
        assert_eq!(raw.get("beta_J"), Some("-0.1"));
        let run = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(run.lattice.bc, BoundaryCondition::PeriodicEven);
        assert_eq!(run.subsystem, SubsystemSpec::new(19, 4));
        assert_eq!(run.quench.n_periods, 20);
    }

    #[test]
    fn pbc_shortcut_picks_odd_sector() {
        let raw = RawConfig::parse("alpha_J=0.2\nbeta_J=0\nbeta_h=0\nL=6\nbc=pbc").unwrap();
        assert_eq!(RunConfig::from_raw(&raw).unwrap().lattice.bc, BoundaryCondition::PeriodicOdd);
        let raw = RawConfig::parse("alpha_J=0.2\nbeta_J=0\nbeta_h=0\nL=6\nbc=pbc\ninitial_state=all-up:x").unwrap();
        assert!(RunConfig::from_raw(&raw).is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(RawConfig::parse("alpha_J 0.2").is_err());
        assert!(RawConfig::parse("a = 1\na = 2").is_err());
        assert!(RawConfig::parse("a b = 1").is_err());
        assert!(RawConfig::parse("a =").is_err());
        let raw = RawConfig::parse("alpha_J = nan\nbeta_J=0\nbeta_h=0\nL=4").unwrap();
        assert!(RunConfig::from_raw(&raw).is_err());
        let raw = RawConfig::parse("alpha_J = 0\nbeta_J=0\nbeta_h=0\nL=4\nL_A=5").unwrap();
        assert!(RunConfig::from_raw(&raw).is_err());
        let raw = RawConfig::parse("zeta = 1").unwrap();
        assert!(raw.check_keys(&[]).is_err());
    }

    #[test]
    fn k_follows_units() {
        let raw = RawConfig::parse("alpha_J=0.2\nbeta_J=0\nbeta_h=0\nL=8\nK=0.2\ninitial_state=all-up:x").unwrap();
        let run = RunConfig::from_raw(&raw).unwrap();
        assert!((run.quench.k_field - 0.05 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(run.quench.initial, InitialState::AllUp(Basis::X));
    }

    #[test]
    fn text_round_trip() {
        let raw = RawConfig::parse(SAMPLE).unwrap();
        assert_eq!(RawConfig::parse(&raw.to_text()).unwrap(), raw);
    }

    proptest::proptest! {
        #[test]
        fn parser_never_panics(s in "\\PC{0,200}") {
            let _ = RawConfig::parse(&s);
        }
    }
}

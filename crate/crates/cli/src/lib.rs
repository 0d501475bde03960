//! Library side of the `nhtfim` command-line runner: task execution, sweeps,
//! plot bundles and output helpers shared with the fuzz targets.

pub mod plots;
pub mod sweep;
pub mod tasks;

use std::path::{Path, PathBuf};

use nhtfim::config::RawConfig;
use nhtfim::model::InitialState;
use nhtfim::{Error, Result};
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit code for an error: bad input and I/O map to 2, numerics to 3.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() || matches!(e, Error::Io(_) | Error::Json(_)) {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Replaces the seed of a `random:<basis>:<seed>` initial state.
pub fn apply_seed(raw: &mut RawConfig, seed: u64) -> Result<()> {
    if let Some(text) = raw.get("initial_state") {
        if let InitialState::Random { basis, .. } = text.parse::<InitialState>()? {
            let b = match basis {
                nhtfim::model::Basis::Z => "z",
                nhtfim::model::Basis::X => "x",
            };
            raw.set("initial_state", format!("random:{b}:{seed}"));
        }
    }
    Ok(())
}

/// Resolves `path` against `dir` unless it is absolute.
pub fn output_path(dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        dir.join(path)
    }
}

/// `<stem><suffix>.<ext>` next to `path`.
pub fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Validation("x".into())), EXIT_VALIDATION);
        assert_eq!(exit_code(&Error::NumericalBreakdown { reason: "x".into(), condition: 1.0 }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::DegenerateEvolution { period: 3 }), EXIT_NUMERICAL);
    }

    #[test]
    fn seed_replaces_random_state_only() {
        let mut raw = RawConfig::parse("initial_state = random:x:1").unwrap();
        apply_seed(&mut raw, 9).unwrap();
        assert_eq!(raw.get("initial_state"), Some("random:x:9"));
        let mut raw = RawConfig::parse("initial_state = neel").unwrap();
        apply_seed(&mut raw, 9).unwrap();
        assert_eq!(raw.get("initial_state"), Some("neel"));
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("out/run.csv"), "_summary", "csv"), PathBuf::from("out/run_summary.csv"));
        assert_eq!(sibling(Path::new("run.csv"), "", "json"), PathBuf::from("run.json"));
    }
}

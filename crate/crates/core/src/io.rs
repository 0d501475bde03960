//! Binary complex matrices with JSON sidecars, and tabular column checks.
//!
//! A matrix dump is `<stem>.bin`, row-major little-endian complex128 (real then
//! imaginary, 16 bytes per entry), next to `<stem>.json` describing its shape.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::C64;

pub const DTYPE: &str = "complex128";
pub const ORDER: &str = "row-major";
pub const ENDIAN: &str = "little";

/// Largest accepted entry count, 2^28 (4 GiB of data).
pub const MAX_ENTRIES: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixHeader {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub order: String,
    pub endian: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
}

impl MatrixHeader {
    pub fn new(rows: usize, cols: usize, period: Option<usize>) -> Self {
        MatrixHeader { rows, cols, dtype: DTYPE.into(), order: ORDER.into(), endian: ENDIAN.into(), period }
    }

    pub fn validate(&self) -> Result<usize> {
        if self.dtype != DTYPE || self.order != ORDER || self.endian != ENDIAN {
            return invalid(format!(
                "unsupported layout {}/{}/{}, expected {DTYPE}/{ORDER}/{ENDIAN}",
                self.dtype, self.order, self.endian
            ));
        }
        match self.rows.checked_mul(self.cols) {
            Some(n) if n <= MAX_ENTRIES => Ok(n),
            _ => invalid(format!("matrix {}×{} exceeds {MAX_ENTRIES} entries", self.rows, self.cols)),
        }
    }
}

pub fn parse_header(text: &str) -> Result<MatrixHeader> {
    let h: MatrixHeader = serde_json::from_str(text).map_err(|e| crate::Error::Validation(format!("matrix header: {e}")))?;
    h.validate()?;
    Ok(h)
}

pub fn encode_matrix(m: &Array2<C64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.len() * 16);
    for z in m.iter() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode_matrix(bytes: &[u8], header: &MatrixHeader) -> Result<Array2<C64>> {
    let n = header.validate()?;
    if bytes.len() != n * 16 {
        return invalid(format!("expected {} bytes for {}×{}, got {}", n * 16, header.rows, header.cols, bytes.len()));
    }
    let data: Vec<C64> = bytes
        .chunks_exact(16)
        .map(|ch| {
            let re = f64::from_le_bytes(ch[..8].try_into().expect("8-byte slice"));
            let im = f64::from_le_bytes(ch[8..].try_into().expect("8-byte slice"));
            C64::new(re, im)
        })
        .collect();
    Array2::from_shape_vec((header.rows, header.cols), data).map_err(|e| crate::Error::Validation(e.to_string()))
}

fn sidecar(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `<stem>.bin` and `<stem>.json`; returns the binary path.
pub fn write_matrix(stem: &Path, m: &Array2<C64>, period: Option<usize>) -> Result<PathBuf> {
    let bin = stem.with_extension("bin");
    fs::write(&bin, encode_matrix(m))?;
    let header = MatrixHeader::new(m.nrows(), m.ncols(), period);
    fs::write(sidecar(&bin), serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(bin)
}

pub fn read_matrix(bin: &Path) -> Result<(Array2<C64>, MatrixHeader)> {
    let header = parse_header(&fs::read_to_string(sidecar(bin))?)?;
    let m = decode_matrix(&fs::read(bin)?, &header)?;
    Ok((m, header))
}

/// Positions of the required columns in a header row; the error names the
/// first missing column.
pub fn require_columns(header: &[String], required: &[&str]) -> Result<Vec<usize>> {
    required
        .iter()
        .map(|&name| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| crate::Error::Validation(format!("missing column `{name}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn byte_layout_is_row_major_little_endian() {
        let m = Array2::from_shape_vec((1, 2), vec![C64::new(1.0, -2.0), C64::new(0.5, 0.0)]).unwrap();
        let b = encode_matrix(&m);
        assert_eq!(b.len(), 32);
        assert_eq!(&b[..8], &1.0f64.to_le_bytes());
        assert_eq!(&b[8..16], &(-2.0f64).to_le_bytes());
        assert_eq!(&b[16..24], &0.5f64.to_le_bytes());
    }

    #[test]
    fn header_json_shape() {
        let h = MatrixHeader::new(4, 4, Some(3));
        let text = serde_json::to_string(&h).unwrap();
        assert_eq!(text, r#"{"rows":4,"cols":4,"dtype":"complex128","order":"row-major","endian":"little","period":3}"#);
        assert_eq!(parse_header(&text).unwrap(), h);
    }

    #[test]
    fn rejects_bad_headers_and_lengths() {
        assert!(parse_header(r#"{"rows":2,"cols":2,"dtype":"complex64","order":"row-major","endian":"little"}"#).is_err());
        assert!(parse_header(r#"{"rows":2,"cols":2,"dtype":"complex128","order":"row-major","endian":"little","x":1}"#).is_err());
        assert!(parse_header(&format!(
            r#"{{"rows":{},"cols":{},"dtype":"complex128","order":"row-major","endian":"little"}}"#,
            usize::MAX,
            2
        ))
        .is_err());
        let h = MatrixHeader::new(2, 2, None);
        assert!(decode_matrix(&[0u8; 63], &h).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Array2::from_shape_fn((3, 2), |(i, j)| C64::new(i as f64, -(j as f64) / 3.0));
        let bin = write_matrix(&dir.path().join("c_0001"), &m, Some(1)).unwrap();
        let (back, h) = read_matrix(&bin).unwrap();
        assert_eq!(back, m);
        assert_eq!(h.period, Some(1));
    }

    #[test]
    fn missing_column_is_named() {
        let header: Vec<String> = ["period", "S_A"].iter().map(|s| s.to_string()).collect();
        assert_eq!(require_columns(&header, &["S_A", "period"]).unwrap(), vec![1, 0]);
        let e = require_columns(&header, &["period", "beta_J"]).unwrap_err();
        assert!(e.to_string().contains("beta_J"));
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let m = Array2::from_shape_fn((rows, cols), |(i, j)| {
                let x = (seed.wrapping_mul(31 + i as u64).wrapping_add(j as u64) % 1000) as f64;
                C64::new(x / 7.0, -x / 13.0)
            });
            let back = decode_matrix(&encode_matrix(&m), &MatrixHeader::new(rows, cols, None)).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn header_parser_never_panics(s in ".{0,200}") {
            let _ = parse_header(&s);
        }
    }
}

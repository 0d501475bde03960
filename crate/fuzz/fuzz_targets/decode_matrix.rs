#![no_main]

use libfuzzer_sys::fuzz_target;
use nhtfim::io::{decode_matrix, encode_matrix, parse_header};

// Input: JSON header, a newline, then the raw matrix bytes.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == b'\n') else { return };
    let Ok(text) = std::str::from_utf8(&data[..split]) else { return };
    let Ok(header) = parse_header(text) else { return };
    if let Ok(m) = decode_matrix(&data[split + 1..], &header) {
        assert_eq!(m.dim(), (header.rows, header.cols));
        assert_eq!(encode_matrix(&m), data[split + 1..]);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use nhtfim::config::{RawConfig, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(raw) = RawConfig::parse(text) {
        // Round trip through the canonical text form.
        let again = RawConfig::parse(&raw.to_text()).expect("canonical text reparses");
        assert_eq!(raw, again);
        let _ = RunConfig::from_raw(&raw);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use nhtfim_cli::plots::{fig2, fig3, fig6, read_table};

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = read_table(data, &["L", "beta_J", "S_top"]) {
        assert_eq!(t.columns.len(), 3);
    }
    let _ = fig2(data);
    let _ = fig3(data);
    let _ = fig6(data, Some((-0.3, 1.0)));
});

#![no_main]

use comet_core::metrics::{metric_row, ResourceReport};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(report) = serde_json::from_slice::<ResourceReport>(data) {
        let _ = metric_row("fuzz", &report, 0.2, 100e6);
    }
});

#![no_main]

use comet_core::fxp::FxpFormat;
use comet_core::tensor_io::{decode_cbt, decode_cbt_checked, encode_cbt};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((t, dtype)) = decode_cbt(data) {
        // Anything accepted must re-encode to the same bytes.
        assert_eq!(encode_cbt(&t, dtype).unwrap(), data);
    }
    let _ = decode_cbt_checked(data, FxpFormat::input(8).unwrap());
});

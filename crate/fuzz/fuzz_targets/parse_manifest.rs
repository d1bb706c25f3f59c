#![no_main]

use comet_core::tensor_io::{parse_manifest, Manifest};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((manifest, model)) = parse_manifest(text) {
        model.validate().unwrap();
        let again = serde_json::to_string(&manifest).unwrap();
        let (m2, model2) = parse_manifest(&again).unwrap();
        assert_eq!(m2, manifest);
        assert_eq!(model2, model);
        let _: Manifest = m2;
    }
});

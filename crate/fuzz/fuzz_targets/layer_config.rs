#![no_main]

use comet_core::im2col_addr::{AddrGen, LayerConfigWord};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(cfg) = serde_json::from_slice::<LayerConfigWord>(data) else { return };
    if cfg.validate().is_err() || cfg.output_len() * cfg.patch_len() > 1 << 16 {
        return;
    }
    if let Ok(gen) = AddrGen::new(cfg, 4, 0) {
        let stream = gen.run().unwrap();
        assert_eq!(stream.write_addresses().len(), cfg.output_len());
    }
});

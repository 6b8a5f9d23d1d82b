#![no_main]

use cew_core::dataset::parse_meta;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((kind, preset, _)) = parse_meta(text) {
            assert_eq!(preset.kind, kind);
            assert!(preset.width() >= 1);
        }
    }
});

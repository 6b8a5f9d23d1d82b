#![no_main]

use cew_core::eval::RocCurve;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(curve) = RocCurve::from_table(text) {
        let again = RocCurve::from_table(&curve.to_table()).expect("written table parses");
        assert_eq!(again.points.len(), curve.points.len());
    }
});

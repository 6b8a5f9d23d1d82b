#![no_main]

use cew_core::measure::MeasurementPreset;
use cew_core::SystemKind;
use libfuzzer_sys::fuzz_target;

// First byte picks the system kind, the rest is the preset text.
fuzz_target!(|data: &[u8]| {
    let Some((&k, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let kind = SystemKind::ALL[usize::from(k) % 2];
    if let Ok(p) = MeasurementPreset::parse(kind, text) {
        assert!(p.width() >= 1);
        assert_eq!(
            p.column_indices(&p).expect("self projection"),
            (0..p.width()).collect::<Vec<_>>()
        );
    }
});

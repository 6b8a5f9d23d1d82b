#![no_main]

use cew_core::dataset::parse_table;
use libfuzzer_sys::fuzz_target;

// First byte picks the declared feature width, the rest is the table.
fuzz_target!(|data: &[u8]| {
    let Some((&w, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let width = 1 + usize::from(w) % 45;
    if let Ok(records) = parse_table(text, width) {
        for r in &records {
            assert_eq!(r.values.len(), width);
            assert!(r.values.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((0.0..=0.5).contains(&r.negativity));
        }
    }
});

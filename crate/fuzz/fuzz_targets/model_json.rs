#![no_main]

use cew_core::model::Mlp;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = Mlp::from_json(text) {
        let again = Mlp::from_json(&model.to_json()).expect("serialized model parses");
        assert_eq!(again.params().len(), model.params().len());
        let x = vec![0.25; model.input_dim()];
        let _ = model.predict(&x);
    }
});

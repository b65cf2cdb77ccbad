#![no_main]

use libfuzzer_sys::fuzz_target;
use reweighted_glasso::experiments::SweepSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = SweepSpec::from_json(text) {
        let json = serde_json::to_string(&spec).expect("specs serialize");
        assert_eq!(SweepSpec::from_json(&json).expect("serialized spec parses"), spec);
    }
});

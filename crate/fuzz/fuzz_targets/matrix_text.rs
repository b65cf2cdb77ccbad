#![no_main]

use libfuzzer_sys::fuzz_target;
use reweighted_glasso::SymMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = SymMatrix::parse_text(text) {
        let again = SymMatrix::parse_text(&m.to_text()).expect("written text parses");
        assert_eq!(m, again);
    }
});

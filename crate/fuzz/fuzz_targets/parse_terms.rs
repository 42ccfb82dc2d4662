#![no_main]

use eddi::basis::parse_terms;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(lib) = parse_terms(text) {
        // Rendering is canonical: it parses back to the same library.
        let again = parse_terms(&lib.render()).expect("rendered library parses");
        assert_eq!(again, lib);
    }
});

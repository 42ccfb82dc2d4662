#![no_main]

use eddi::modelfile::ModelFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = ModelFile::from_json_bytes(data) {
        let text = model.to_json();
        let back = ModelFile::from_json(&text).expect("serialized model parses");
        assert_eq!(back, model);
    }
});

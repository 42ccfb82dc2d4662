#![no_main]

use eddi::csvio::{read_table_bytes, write_table};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = read_table_bytes(data) {
        let mut out = Vec::new();
        write_table(&table, &mut out).expect("accepted table writes");
        let back = read_table_bytes(&out).expect("written table reads");
        assert_eq!(back.len(), table.len());
    }
});

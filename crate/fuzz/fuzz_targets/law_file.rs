#![no_main]

use libfuzzer_sys::fuzz_target;
use toruswalk::law::{format_law_file, parse_law_file};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Anything accepted is a valid law and must survive a write/read cycle.
    if let Ok(law) = parse_law_file(text) {
        let again = parse_law_file(&format_law_file(&law)).expect("formatted law parses");
        assert_eq!(again.support(), law.support());
        assert_eq!(again.name(), law.name());
    }
});

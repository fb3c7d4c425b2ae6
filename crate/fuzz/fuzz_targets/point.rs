#![no_main]

use libfuzzer_sys::fuzz_target;
use toruswalk::verify::parse_point;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Some(p) = parse_point(text) {
        assert_eq!(parse_point(&format!("{},{}", p.x1, p.x2)), Some(p));
        assert_eq!(parse_point(&format!("({}, {})", p.x1, p.x2)), Some(p));
    }
});

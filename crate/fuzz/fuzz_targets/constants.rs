#![no_main]

use libfuzzer_sys::fuzz_target;
use toruswalk::verify::Context;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut ctx = Context::default();
    if let Ok(n) = ctx.load_frozen(text, "abc") {
        assert!(ctx.frozen.len() <= n);
    }
});

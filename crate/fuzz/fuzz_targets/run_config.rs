#![no_main]

use libfuzzer_sys::fuzz_target;
use toruswalk::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::parse(text) else { return };
    let _ = cfg.validate();
    let echoed = cfg.to_string();
    let again = RunConfig::parse(&echoed).expect("echoed config parses");
    assert_eq!(again.to_string(), echoed);
});

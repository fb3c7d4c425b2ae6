#![no_main]

use libfuzzer_sys::fuzz_target;
use toruswalk::law::LawSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = text.parse::<LawSpec>() {
        let shown = spec.to_string();
        assert_eq!(shown.parse::<LawSpec>().ok(), Some(spec.clone()), "{shown}");
        // Building may fail on bad parameters but must not panic. File specs
        // would touch the filesystem.
        if !matches!(spec, LawSpec::File(_)) {
            if let LawSpec::PowerLaw { r_max, .. } = spec {
                if r_max > 64 {
                    return;
                }
            }
            let _ = spec.build();
        }
    }
});

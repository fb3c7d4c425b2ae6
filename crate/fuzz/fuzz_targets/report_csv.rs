#![no_main]

use libfuzzer_sys::fuzz_target;
use toruswalk::report::{render_svg, series, PlotSpec, Table};

fuzz_target!(|data: &[u8]| {
    // First line picks the columns, the rest is the table.
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Some((name, csv)) = text.split_once('\n') else { return };
    let Ok(table) = Table::read(csv.as_bytes()) else { return };
    let Ok(mut spec) = PlotSpec::from_name(name) else { return };
    for log in [false, true] {
        spec.log_x = log;
        spec.log_y = !log;
        if let Ok(s) = series(&table, &spec) {
            if let Ok(svg) = render_svg(&s, &spec) {
                assert!(svg.starts_with("<svg"));
            }
        }
    }
});

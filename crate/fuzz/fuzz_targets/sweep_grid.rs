#![no_main]

use libfuzzer_sys::fuzz_target;
use toruswalk::verify::{validate_grid, SweepGrid};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(grid) = SweepGrid::parse(text) else { return };
    let canonical = grid.to_string();
    let again = SweepGrid::parse(&canonical).expect("canonical grid parses");
    assert_eq!(again, grid);
    assert_eq!(again.hash(), grid.hash());
    let _ = validate_grid(&grid);
    for name in grid.sections.keys() {
        let p = grid.params(name).expect("section exists");
        for key in ["n", "K", "laws", "pairs", "points", "s"] {
            let _ = p.floats(key);
            let _ = p.ints(key);
            let _ = p.pairs(key);
            let _ = p.points(key);
            let _ = p.laws();
        }
    }
});

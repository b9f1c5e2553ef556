#![no_main]

use libfuzzer_sys::fuzz_target;
use wdl::congruence::{parse_algebra_json, OAlgebra};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(pres) = parse_algebra_json(s) else { return };
    // bound the construction work, not the parse
    if pres.r <= 5
        && pres.generators.len() <= 5
        && pres
            .generators
            .iter()
            .all(|g| g.iter().all(|&x| x.unsigned_abs() <= 1_000_000))
    {
        let _ = OAlgebra::from_presentation(&pres);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use wdl::congruence::{parse_module_json, OAlgebra, RModule};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(pres) = parse_module_json(s) else { return };
    if pres.rank == 0
        || pres.rank > 5
        || pres.actions.len() > 3
        || pres
            .actions
            .iter()
            .any(|m| m.iter().any(|row| row.iter().any(|&x| x.unsigned_abs() > 1_000_000)))
    {
        return;
    }
    // validate against a fixed small algebra with a matching generator count
    let apres = wdl::congruence::AlgebraPresentation {
        p: 3,
        r: 2,
        generators: (0..pres.actions.len() as i64).map(|k| vec![0, 9 * (k + 1)]).collect(),
    };
    let Ok(algebra) = OAlgebra::from_presentation(&apres) else { return };
    let _ = RModule::from_presentation(&algebra, &pres);
});

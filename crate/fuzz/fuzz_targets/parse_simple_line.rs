#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        // cap the coefficient size so the conductor recomputation stays cheap
        if s.len() <= 200 {
            let _ = wdl::scan::parse_simple_line(s);
        }
    }
});

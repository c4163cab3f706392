#![no_main]

use libfuzzer_sys::fuzz_target;
use watermarket::io::{parse_vc, parse_x3c};
use watermarket::reductions::{minvc_to_feasdemog, x3c_to_maxwelfare};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(x) = parse_x3c(text) {
        if x.t() <= 30 && x.sets().len() <= 30 {
            let _ = x3c_to_maxwelfare(&x, 4);
        }
    }
    if let Ok(g) = parse_vc(text) {
        if g.n() <= 30 {
            let _ = minvc_to_feasdemog(&g);
        }
    }
});

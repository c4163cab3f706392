#![no_main]

use libfuzzer_sys::fuzz_target;
use watermarket::io::{instance_to_json, parse_instance};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(inst) = parse_instance(text) {
        // anything accepted must survive a round trip unchanged
        let again = parse_instance(&instance_to_json(&inst)).expect("re-parse");
        assert_eq!(again, inst);
        let _ = inst.monotonicity_violations();
    }
});

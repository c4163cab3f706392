#![no_main]

use libfuzzer_sys::fuzz_target;
use watermarket::io::{parse_instance, parse_solution};
use watermarket::{validate_assignment, welfare};

const INSTANCE: &str = r#"{"sellers":[{"id":"s","rank":1,"units":["1","2"]}],
  "buyers":[{"id":"b","rank":1,"units":["3","2"]},{"id":"c","rank":1,"units":["4"]}],
  "edges":[["s","b"],["s","c"]]}"#;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let inst = parse_instance(INSTANCE).unwrap();
    if let Ok(a) = parse_solution(text, &inst) {
        // out-of-range units must be reported, not panic
        let _ = validate_assignment(&a, &inst);
        let _ = welfare(&a, &inst);
    }
});

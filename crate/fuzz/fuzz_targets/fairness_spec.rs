#![no_main]

use libfuzzer_sys::fuzz_target;
use watermarket::fairness::{build_fairness_lp, singleton_bounds};
use watermarket::io::{parse_fairness_spec, parse_instance};

const INSTANCE: &str = r#"{"sellers":[{"id":"s","rank":1,"units":["1"]}],
  "buyers":[{"id":"b","rank":1,"units":["3"]},{"id":"c","rank":1,"units":["2"]}],
  "edges":[["s","b"],["s","c"]]}"#;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let inst = parse_instance(INSTANCE).unwrap();
    if let Ok(spec) = parse_fairness_spec(text) {
        let _ = singleton_bounds(&inst, &spec);
        let _ = build_fairness_lp(&inst, &spec);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use watermarket::io::parse_topology;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_topology(text) {
        let lineages = t.lineages().expect("accepted topology has lineages");
        assert_eq!(lineages.len(), t.segments.len());
    }
});

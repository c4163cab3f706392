#![no_main]

use libfuzzer_sys::fuzz_target;
use watermarket::io::{parse_leximin, LeximinJson};
use watermarket::leximin::solve_leximin;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(inst) = parse_leximin(text) else { return };
    let json = serde_json::to_string(&LeximinJson::from(&inst)).unwrap();
    assert_eq!(parse_leximin(&json).unwrap(), inst);
    // keep the solver to sizes it handles quickly
    let demand: u64 = inst.gammas().iter().map(|&g| u64::from(g)).sum();
    if inst.k() <= 12 && demand <= 24 {
        let sol = solve_leximin(&inst);
        assert!(sol.counts.iter().sum::<usize>() <= inst.k());
    }
});

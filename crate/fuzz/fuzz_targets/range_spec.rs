#![no_main]

use libfuzzer_sys::fuzz_target;
use shrinkerlab::config::{parse_range, MAX_RANGE_POINTS};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = parse_range(text) {
        assert!(!grid.is_empty());
        assert!(grid.len() <= MAX_RANGE_POINTS + 1);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
        assert!(grid.iter().all(|v| v.is_finite()));
    }
});

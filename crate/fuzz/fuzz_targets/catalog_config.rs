#![no_main]

use libfuzzer_sys::fuzz_target;
use shrinkerlab::config::parse_catalog_config;

// Strict key = value grammar: never panic, and accepted configs must obey
// the documented bounds.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = parse_catalog_config(text) {
        assert!(spec.resolution <= 16);
        assert!(spec.halflength > 0.0 && spec.halflength <= 1e6);
        assert!(spec.effective_radius().is_finite());
        assert!(spec.offset.iter().all(|c| c.is_finite()));
    }
});

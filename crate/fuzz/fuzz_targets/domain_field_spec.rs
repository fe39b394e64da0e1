#![no_main]

use libfuzzer_sys::fuzz_target;
use shrinkerlab::config::{parse_domain, parse_field, parse_seed};
use shrinkerlab::reilly::DomainSpec;

// First line is treated as a domain spec, second as a field spec, third as
// a seed. None may panic; accepted domains must satisfy their invariants.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let mut lines = text.lines();
    if let Some(domain) = lines.next() {
        if let Ok(spec) = parse_domain(domain) {
            match spec {
                DomainSpec::Ball { radius } => assert!(radius > 0.0),
                DomainSpec::Shell { inner, outer } => assert!(outer > inner && inner > 0.0),
            }
        }
    }
    if let Some(field) = lines.next() {
        if let Ok(f) = parse_field(field) {
            // Accepted fields must evaluate finitely at a benign point.
            let x = shrinkerlab::mesh::Vec3::new(0.25, -0.5, 0.75);
            assert!(f.eval(&x).is_finite());
        }
    }
    if let Some(seed) = lines.next() {
        let _ = parse_seed(seed);
    }
});

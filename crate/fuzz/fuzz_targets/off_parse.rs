#![no_main]

use libfuzzer_sys::fuzz_target;
use shrinkerlab::mesh::{off_to_string, parse_off, EmbeddedSurfaceMesh};

// Parsing must never panic; meshes that survive validation must round-trip
// through the writer with identical geometry and connectivity.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok((positions, triangles)) = parse_off(text) else {
        return;
    };
    if positions.len() > 10_000 || triangles.len() > 10_000 {
        return;
    }
    let Ok(mesh) = EmbeddedSurfaceMesh::new(positions, triangles) else {
        return;
    };
    let written = off_to_string(&mesh);
    let (positions2, triangles2) = parse_off(&written).expect("writer output must parse");
    assert_eq!(mesh.positions(), &positions2[..]);
    assert_eq!(mesh.triangles(), &triangles2[..]);
});

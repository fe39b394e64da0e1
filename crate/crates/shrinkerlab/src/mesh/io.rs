//! ASCII OFF and OBJ readers/writers.
//!
//! Readers return raw vertex/triangle lists without topological validation
//! so malformed files fail with parse errors and structurally bad meshes
//! fail later in `EmbeddedSurfaceMesh::new`. Writers emit positions with 17
//! significant digits so geometry round-trips bit-exactly.

use std::path::Path;

use super::{EmbeddedSurfaceMesh, Vec3};
use crate::error::{Error, Result};

/// Upper bound on counts accepted from file headers, to keep hostile input
/// from driving allocations.
const MAX_DECLARED: usize = 50_000_000;

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

/// Parse an ASCII OFF file. Accepts `#` comments and blank lines; faces must
/// be triangles.
pub fn parse_off(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (first_no, first) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty OFF file".into()))?;
    // The header keyword is optional in the wild; counts may share its line.
    let counts_line = if first.eq_ignore_ascii_case("OFF") {
        lines
            .next()
            .ok_or_else(|| parse_err(first_no, "missing counts line"))?
    } else if let Some(rest) = first
        .strip_prefix("OFF")
        .or_else(|| first.strip_prefix("off"))
    {
        (first_no, rest.trim())
    } else {
        (first_no, first)
    };

    let counts: Vec<&str> = counts_line.1.split_whitespace().collect();
    if counts.len() < 2 {
        return Err(parse_err(counts_line.0, "expected `nv nf [ne]` counts"));
    }
    let nv: usize = counts[0]
        .parse()
        .map_err(|_| parse_err(counts_line.0, "bad vertex count"))?;
    let nf: usize = counts[1]
        .parse()
        .map_err(|_| parse_err(counts_line.0, "bad face count"))?;
    if nv > MAX_DECLARED || nf > MAX_DECLARED {
        return Err(parse_err(counts_line.0, "declared counts too large"));
    }

    let mut positions = Vec::with_capacity(nv.min(1 << 20));
    for _ in 0..nv {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of file in vertex list".into()))?;
        let mut it = line.split_whitespace();
        let mut coord = [0.0f64; 3];
        for c in &mut coord {
            *c = it
                .next()
                .ok_or_else(|| parse_err(no, "vertex line needs 3 coordinates"))?
                .parse()
                .map_err(|_| parse_err(no, "bad coordinate"))?;
        }
        positions.push(Vec3::new(coord[0], coord[1], coord[2]));
    }

    let mut triangles = Vec::with_capacity(nf.min(1 << 20));
    for _ in 0..nf {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of file in face list".into()))?;
        let mut it = line.split_whitespace();
        let arity: usize = it
            .next()
            .ok_or_else(|| parse_err(no, "face line needs a vertex count"))?
            .parse()
            .map_err(|_| parse_err(no, "bad face arity"))?;
        if arity != 3 {
            return Err(parse_err(no, format!("only triangles supported, got {arity}-gon")));
        }
        let mut tri = [0usize; 3];
        for t in &mut tri {
            *t = it
                .next()
                .ok_or_else(|| parse_err(no, "face line too short"))?
                .parse()
                .map_err(|_| parse_err(no, "bad vertex index"))?;
        }
        triangles.push(tri);
    }

    Ok((positions, triangles))
}

/// Parse a minimal ASCII OBJ: `v x y z` and triangular `f` records
/// (`f i j k`, 1-based, `i/t/n` suffixes tolerated). Other records are
/// ignored.
pub fn parse_obj(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let no = no + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coord = [0.0f64; 3];
                for c in &mut coord {
                    *c = it
                        .next()
                        .ok_or_else(|| parse_err(no, "vertex needs 3 coordinates"))?
                        .parse()
                        .map_err(|_| parse_err(no, "bad coordinate"))?;
                }
                if positions.len() >= MAX_DECLARED {
                    return Err(parse_err(no, "too many vertices"));
                }
                positions.push(Vec3::new(coord[0], coord[1], coord[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or("");
                        head.parse::<i64>()
                            .map_err(|_| parse_err(no, "bad face index"))
                            .and_then(|i| {
                                // Negative indices count from the end.
                                let n = positions.len() as i64;
                                let i = if i < 0 { n + 1 + i } else { i };
                                if i >= 1 && i <= n {
                                    Ok((i - 1) as usize)
                                } else {
                                    Err(parse_err(no, "face index out of range"))
                                }
                            })
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(no, "only triangular faces supported"));
                }
                triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((positions, triangles))
}

/// Format as ASCII OFF with 17 significant digits per coordinate.
pub fn off_to_string(mesh: &EmbeddedSurfaceMesh) -> String {
    let mut out = String::new();
    out.push_str("OFF\n");
    out.push_str(&format!(
        "{} {} {}\n",
        mesh.vertex_count(),
        mesh.triangle_count(),
        mesh.adjacency().edges.len()
    ));
    for p in mesh.positions() {
        out.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", p.x, p.y, p.z));
    }
    for t in mesh.triangles() {
        out.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    out
}

/// Format as ASCII OBJ (1-based face indices).
pub fn obj_to_string(mesh: &EmbeddedSurfaceMesh) -> String {
    let mut out = String::new();
    for p in mesh.positions() {
        out.push_str(&format!("v {:.16e} {:.16e} {:.16e}\n", p.x, p.y, p.z));
    }
    for t in mesh.triangles() {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    out
}

pub fn write_off(mesh: &EmbeddedSurfaceMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, off_to_string(mesh))?;
    Ok(())
}

pub fn write_obj(mesh: &EmbeddedSurfaceMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, obj_to_string(mesh))?;
    Ok(())
}

/// Read and validate a mesh from an OFF file.
pub fn read_off(path: impl AsRef<Path>) -> Result<EmbeddedSurfaceMesh> {
    let text = std::fs::read_to_string(path)?;
    let (positions, triangles) = parse_off(&text)?;
    EmbeddedSurfaceMesh::new(positions, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TET: &str = "OFF\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

    #[test]
    fn off_roundtrip_preserves_geometry() {
        let (pos, tris) = parse_off(TET).unwrap();
        let mesh = EmbeddedSurfaceMesh::new(pos, tris).unwrap();
        let text = off_to_string(&mesh);
        let (pos2, tris2) = parse_off(&text).unwrap();
        assert_eq!(mesh.positions(), &pos2[..]);
        assert_eq!(mesh.triangles(), &tris2[..]);
    }

    #[test]
    fn off_rejects_quads() {
        let bad = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        assert!(parse_off(bad).is_err());
    }

    #[test]
    fn obj_accepts_slash_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n";
        let (pos, tris) = parse_obj(text).unwrap();
        assert_eq!(pos.len(), 3);
        assert_eq!(tris, vec![[0, 1, 2]]);
    }

    #[test]
    fn parsers_reject_oversized_headers() {
        let bad = "OFF\n99999999999 1 0\n";
        assert!(parse_off(bad).is_err());
    }
}

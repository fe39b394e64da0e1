//! Closed-form self-shrinker exemplars in R^3.
//!
//! The catalog holds the three explicit solutions of `H = -X^N/2` for
//! surfaces (n = 2): the plane through the origin, the sphere of radius
//! sqrt(2n) = 2, and the cylinder of radius sqrt(2). Each exemplar exposes
//! exact frames (position, normal, mean curvature, tangent/normal split)
//! and can be sampled into a validated triangle mesh.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{EmbeddedSurfaceMesh, Vec3};

/// Surface dimension; the catalog is fixed to surfaces in R^3.
pub const N_DIM: usize = 2;
/// Radius of the exact sphere shrinker, sqrt(2n).
pub const EXACT_SPHERE_RADIUS: f64 = 2.0;
/// Circular radius of the exact cylinder shrinker, sqrt(2).
pub const EXACT_CYLINDER_RADIUS: f64 = std::f64::consts::SQRT_2;
/// Default truncation half-length for non-compact exemplars; the Gaussian
/// weight at the cut is exp(-16) ~ 1e-7, below quadrature tolerance.
pub const DEFAULT_HALFLENGTH: f64 = 8.0;
/// Construction refuses meshes larger than this.
pub const VERTEX_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShrinkerKind {
    Plane,
    Sphere,
    Cylinder,
}

impl std::fmt::Display for ShrinkerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ShrinkerKind::Plane => write!(f, "plane"),
            ShrinkerKind::Sphere => write!(f, "sphere"),
            ShrinkerKind::Cylinder => write!(f, "cylinder"),
        }
    }
}

/// Parameters for one exemplar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkerParams {
    /// Sphere or cylinder radius; ignored for the plane.
    pub radius: f64,
    /// Offset of the plane (the component along the plane normal decides
    /// exactness); ignored for sphere and cylinder.
    pub offset: [f64; 3],
}

impl Default for ShrinkerParams {
    fn default() -> Self {
        Self {
            radius: EXACT_SPHERE_RADIUS,
            offset: [0.0; 3],
        }
    }
}

/// A closed-form exemplar with its parametrization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticShrinker {
    pub kind: ShrinkerKind,
    pub radius: f64,
    pub offset: [f64; 3],
    /// True iff the parameters satisfy the shrinker equation identically.
    pub exact: bool,
}

/// Exact differential-geometric data at one surface point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PointFrame {
    /// Position X.
    pub position: [f64; 3],
    /// Unit normal (outward for sphere/cylinder, +z for the plane).
    pub normal: [f64; 3],
    /// Mean curvature vector H = Laplace X.
    pub mean_curvature: [f64; 3],
    /// Normal part of the position.
    pub x_normal: [f64; 3],
    /// Tangential part of the position.
    pub x_tangent: [f64; 3],
    /// Scalar mean curvature <H, nu>.
    pub scalar_mean_curvature: f64,
}

impl PointFrame {
    pub fn position_v(&self) -> Vec3 {
        Vec3::from(self.position)
    }
    pub fn residual_v(&self) -> Vec3 {
        Vec3::from(self.mean_curvature) + 0.5 * Vec3::from(self.x_normal)
    }
}

/// Tolerance inside which parameters count as the exact shrinker values.
const EXACTNESS_TOL: f64 = 1e-12;

/// Construct an exemplar, flagging exactness from the parameters.
pub fn make_shrinker(kind: ShrinkerKind, params: ShrinkerParams) -> Result<AnalyticShrinker> {
    let radius = params.radius;
    match kind {
        ShrinkerKind::Sphere | ShrinkerKind::Cylinder => {
            if !(radius > 0.0) || !radius.is_finite() {
                return Err(Error::Parameter(format!(
                    "{kind} radius must be positive and finite, got {radius}"
                )));
            }
        }
        ShrinkerKind::Plane => {
            if params.offset.iter().any(|c| !c.is_finite()) {
                return Err(Error::Parameter("plane offset must be finite".into()));
            }
        }
    }
    let exact = match kind {
        ShrinkerKind::Sphere => (radius - EXACT_SPHERE_RADIUS).abs() <= EXACTNESS_TOL,
        ShrinkerKind::Cylinder => (radius - EXACT_CYLINDER_RADIUS).abs() <= EXACTNESS_TOL,
        // The plane is a shrinker iff it passes through the origin, i.e. the
        // offset has no normal (z) component.
        ShrinkerKind::Plane => params.offset[2].abs() <= EXACTNESS_TOL,
    };
    Ok(AnalyticShrinker {
        kind,
        radius,
        offset: params.offset,
        exact,
    })
}

impl AnalyticShrinker {
    /// Exact exemplar of the given kind.
    pub fn exact(kind: ShrinkerKind) -> Self {
        let params = match kind {
            ShrinkerKind::Sphere => ShrinkerParams {
                radius: EXACT_SPHERE_RADIUS,
                offset: [0.0; 3],
            },
            ShrinkerKind::Cylinder => ShrinkerParams {
                radius: EXACT_CYLINDER_RADIUS,
                offset: [0.0; 3],
            },
            ShrinkerKind::Plane => ShrinkerParams::default(),
        };
        make_shrinker(kind, params).expect("exact parameters are valid")
    }

    /// Closed-form frame at a parameter point.
    ///
    /// Sphere: (theta, phi) with theta in [0, pi] the polar angle.
    /// Cylinder: (theta, z). Plane: (u, v) in-plane coordinates.
    pub fn eval_frame(&self, a: f64, b: f64) -> Result<PointFrame> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::OutOfDomain("non-finite parameter".into()));
        }
        match self.kind {
            ShrinkerKind::Sphere => {
                if !(0.0..=std::f64::consts::PI).contains(&a) {
                    return Err(Error::OutOfDomain(format!(
                        "polar angle {a} outside [0, pi]"
                    )));
                }
                let r = self.radius;
                let nu = Vec3::new(a.sin() * b.cos(), a.sin() * b.sin(), a.cos());
                let x = r * nu;
                // Laplace of the position on a radius-r sphere: -(n/r^2) X.
                let h = -(N_DIM as f64 / (r * r)) * x;
                Ok(frame(x, nu, h, x, Vec3::zeros()))
            }
            ShrinkerKind::Cylinder => {
                let r = self.radius;
                let nu = Vec3::new(a.cos(), a.sin(), 0.0);
                let xn = r * nu;
                let x = xn + Vec3::new(0.0, 0.0, b);
                // Circle factor carries all the curvature: -(1/r^2) X^N.
                let h = -(1.0 / (r * r)) * xn;
                Ok(frame(x, nu, h, xn, x - xn))
            }
            ShrinkerKind::Plane => {
                let o = Vec3::from(self.offset);
                let x = o + Vec3::new(a, b, 0.0);
                let nu = Vec3::new(0.0, 0.0, 1.0);
                let xn = x.dot(&nu) * nu;
                Ok(frame(x, nu, Vec3::zeros(), xn, x - xn))
            }
        }
    }

    /// Defect of the shrinker equation at a parameter point: `H + X^N/2`.
    pub fn shrinker_residual(&self, a: f64, b: f64) -> Result<Vec3> {
        Ok(self.eval_frame(a, b)?.residual_v())
    }

    /// Sample into a validated mesh.
    ///
    /// Sphere: icosphere with `resolution` subdivision levels. Cylinder:
    /// structured tube with `resolution` vertices around, truncated at
    /// |z| <= halflength. Plane: polar disk of radius `halflength` with
    /// ring count scaling like `5 * 2^resolution`.
    pub fn sample_mesh(&self, resolution: u32, halflength: f64) -> Result<EmbeddedSurfaceMesh> {
        match self.kind {
            ShrinkerKind::Sphere => icosphere(self.radius, resolution),
            ShrinkerKind::Cylinder => {
                if !(halflength > 0.0) {
                    return Err(Error::Parameter(
                        "cylinder truncation half-length must be positive".into(),
                    ));
                }
                tube(self.radius, resolution.max(3), halflength)
            }
            ShrinkerKind::Plane => {
                if !(halflength > 0.0) {
                    return Err(Error::Parameter("disk radius must be positive".into()));
                }
                let rings = 5usize
                    .checked_shl(resolution)
                    .ok_or(Error::Resource {
                        requested: usize::MAX,
                        budget: VERTEX_BUDGET,
                    })?;
                let mut mesh = polar_disk(halflength, rings)?;
                if self.offset != [0.0; 3] {
                    let o = Vec3::from(self.offset);
                    let moved = mesh.positions().iter().map(|p| p + o).collect();
                    mesh = mesh.with_positions(moved)?;
                }
                Ok(mesh)
            }
        }
    }
}

fn frame(x: Vec3, nu: Vec3, h: Vec3, xn: Vec3, xt: Vec3) -> PointFrame {
    PointFrame {
        position: x.into(),
        normal: nu.into(),
        mean_curvature: h.into(),
        x_normal: xn.into(),
        x_tangent: xt.into(),
        scalar_mean_curvature: h.dot(&nu),
    }
}

/// Icosphere: subdivided icosahedron projected to radius `r`, oriented
/// outward. Vertex count is `10 * 4^level + 2`.
pub fn icosphere(r: f64, level: u32) -> Result<EmbeddedSurfaceMesh> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Parameter(format!("sphere radius {r} invalid")));
    }
    let requested = 10usize
        .checked_mul(1usize.checked_shl(2 * level).unwrap_or(usize::MAX))
        .map(|v| v + 2)
        .unwrap_or(usize::MAX);
    if requested > VERTEX_BUDGET {
        return Err(Error::Resource {
            requested,
            budget: VERTEX_BUDGET,
        });
    }

    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut positions: Vec<Vec3> = vec![
        Vec3::new(-1.0, phi, 0.0),
        Vec3::new(1.0, phi, 0.0),
        Vec3::new(-1.0, -phi, 0.0),
        Vec3::new(1.0, -phi, 0.0),
        Vec3::new(0.0, -1.0, phi),
        Vec3::new(0.0, 1.0, phi),
        Vec3::new(0.0, -1.0, -phi),
        Vec3::new(0.0, 1.0, -phi),
        Vec3::new(phi, 0.0, -1.0),
        Vec3::new(phi, 0.0, 1.0),
        Vec3::new(-phi, 0.0, -1.0),
        Vec3::new(-phi, 0.0, 1.0),
    ];
    // Outward-oriented icosahedron faces.
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    use std::collections::HashMap;
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for t in &triangles {
            let mut mid = [0usize; 3];
            for (s, m) in mid.iter_mut().enumerate() {
                let a = t[s];
                let b = t[(s + 1) % 3];
                let key = (a.min(b), a.max(b));
                *m = *midpoint.entry(key).or_insert_with(|| {
                    positions.push(0.5 * (positions[a] + positions[b]));
                    positions.len() - 1
                });
            }
            next.push([t[0], mid[0], mid[2]]);
            next.push([mid[0], t[1], mid[1]]);
            next.push([mid[2], mid[1], t[2]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        triangles = next;
    }

    for p in &mut positions {
        *p *= r / p.norm();
    }
    EmbeddedSurfaceMesh::new(positions, triangles)
}

/// Structured tube mesh for the cylinder of radius `r`, `m` vertices around
/// the circumference, rows spaced to keep triangles near-isotropic, open at
/// z = +-halflength. Oriented with the outward (radial) normal.
pub fn tube(r: f64, m: u32, halflength: f64) -> Result<EmbeddedSurfaceMesh> {
    let m = m as usize;
    let target = 2.0 * std::f64::consts::PI * r / m as f64;
    let rows = ((2.0 * halflength / target).ceil() as usize).max(2) + 1;
    let requested = rows * m;
    if requested > VERTEX_BUDGET {
        return Err(Error::Resource {
            requested,
            budget: VERTEX_BUDGET,
        });
    }
    let mut positions = Vec::with_capacity(rows * m);
    for i in 0..rows {
        let z = -halflength + 2.0 * halflength * i as f64 / (rows - 1) as f64;
        for j in 0..m {
            let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            positions.push(Vec3::new(r * th.cos(), r * th.sin(), z));
        }
    }
    let mut triangles = Vec::with_capacity(2 * (rows - 1) * m);
    for i in 0..rows - 1 {
        for j in 0..m {
            let j1 = (j + 1) % m;
            let a = i * m + j;
            let b = i * m + j1;
            let c = (i + 1) * m + j;
            let d = (i + 1) * m + j1;
            // Outward orientation: counter-clockwise seen from outside.
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    EmbeddedSurfaceMesh::new(positions, triangles)
}

/// Flat polar disk of radius `radius` in the z = 0 plane with `rings`
/// concentric rings (ring j carries 6j vertices), oriented with +z normal.
pub fn polar_disk(radius: f64, rings: usize) -> Result<EmbeddedSurfaceMesh> {
    if rings == 0 {
        return Err(Error::Parameter("disk needs at least one ring".into()));
    }
    let requested = 1 + 3 * rings * (rings + 1);
    if requested > VERTEX_BUDGET {
        return Err(Error::Resource {
            requested,
            budget: VERTEX_BUDGET,
        });
    }
    let mut positions = vec![Vec3::zeros()];
    let mut ring_start = vec![0usize; rings + 1];
    for j in 1..=rings {
        ring_start[j] = positions.len();
        let rj = radius * j as f64 / rings as f64;
        let count = 6 * j;
        for k in 0..count {
            let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            positions.push(Vec3::new(rj * th.cos(), rj * th.sin(), 0.0));
        }
    }

    let mut triangles = Vec::new();
    // Innermost fan.
    for k in 0..6 {
        triangles.push([0, 1 + k, 1 + (k + 1) % 6]);
    }
    // Annuli: connect ring j (6j vertices) to ring j+1 (6(j+1) vertices).
    for j in 1..rings {
        let inner = ring_start[j];
        let outer = ring_start[j + 1];
        let ni = 6 * j;
        let no = 6 * (j + 1);
        // March around both rings by angle, advancing whichever lags.
        let mut i = 0usize; // inner index
        let mut o = 0usize; // outer index
        let angle = |idx: usize, n: usize| 2.0 * std::f64::consts::PI * idx as f64 / n as f64;
        while i < ni || o < no {
            let next_inner = angle(i + 1, ni);
            let next_outer = angle(o + 1, no);
            if o < no && (i == ni || next_outer <= next_inner) {
                triangles.push([
                    outer + o % no,
                    outer + (o + 1) % no,
                    inner + i % ni,
                ]);
                o += 1;
            } else {
                triangles.push([
                    inner + i % ni,
                    outer + o % no,
                    inner + (i + 1) % ni,
                ]);
                i += 1;
            }
        }
    }
    EmbeddedSurfaceMesh::new(positions, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactness_flags() {
        let s = make_shrinker(
            ShrinkerKind::Sphere,
            ShrinkerParams {
                radius: 2.0,
                offset: [0.0; 3],
            },
        )
        .unwrap();
        assert!(s.exact);
        let c = make_shrinker(
            ShrinkerKind::Cylinder,
            ShrinkerParams {
                radius: EXACT_CYLINDER_RADIUS,
                offset: [0.0; 3],
            },
        )
        .unwrap();
        assert!(c.exact);
        let s1 = make_shrinker(
            ShrinkerKind::Sphere,
            ShrinkerParams {
                radius: 1.0,
                offset: [0.0; 3],
            },
        )
        .unwrap();
        assert!(!s1.exact);
    }

    #[test]
    fn nonpositive_radius_rejected() {
        let err = make_shrinker(
            ShrinkerKind::Sphere,
            ShrinkerParams {
                radius: -1.0,
                offset: [0.0; 3],
            },
        );
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn sphere_frame_closed_forms() {
        let s = AnalyticShrinker::exact(ShrinkerKind::Sphere);
        let f = s.eval_frame(1.1, 2.3).unwrap();
        let x = Vec3::from(f.position);
        let h = Vec3::from(f.mean_curvature);
        // H = -X/2 on the exact sphere.
        assert!((h + 0.5 * x).norm() < 1e-14);
        assert_eq!(f.x_tangent, [0.0; 3]);
        assert!((f.scalar_mean_curvature + 1.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_domain_error() {
        let s = AnalyticShrinker::exact(ShrinkerKind::Sphere);
        assert!(matches!(
            s.eval_frame(4.0, 0.0),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn residual_magnitudes() {
        // Radius-1 sphere: |-n/r + r/2| = 3/2.
        let s1 = make_shrinker(
            ShrinkerKind::Sphere,
            ShrinkerParams {
                radius: 1.0,
                offset: [0.0; 3],
            },
        )
        .unwrap();
        let r = s1.shrinker_residual(0.7, 0.3).unwrap();
        assert!((r.norm() - 1.5).abs() < 1e-13, "got {}", r.norm());
        // Plane offset by (0,0,1): |X^N/2| = 1/2.
        let p = make_shrinker(
            ShrinkerKind::Plane,
            ShrinkerParams {
                radius: 0.0,
                offset: [0.0, 0.0, 1.0],
            },
        )
        .unwrap();
        let rp = p.shrinker_residual(0.0, 0.0).unwrap();
        assert!((rp.norm() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn cylinder_frame_example() {
        let c = AnalyticShrinker::exact(ShrinkerKind::Cylinder);
        let th = 0.9;
        let f = c.eval_frame(th, 3.0).unwrap();
        let expect_xn = Vec3::new(
            EXACT_CYLINDER_RADIUS * th.cos(),
            EXACT_CYLINDER_RADIUS * th.sin(),
            0.0,
        );
        assert!((Vec3::from(f.x_normal) - expect_xn).norm() < 1e-14);
        assert!((Vec3::from(f.mean_curvature) + 0.5 * expect_xn).norm() < 1e-14);
    }

    #[test]
    fn icosphere_combinatorics() {
        let mesh = icosphere(2.0, 3).unwrap();
        assert_eq!(mesh.vertex_count(), 642);
        assert_eq!(mesh.triangle_count(), 1280);
        let d = mesh.diagnostics();
        assert_eq!(d.euler_characteristic, 2);
        assert_eq!(d.genus, Some(0));
        assert!(d.is_closed);
    }

    #[test]
    fn vertex_budget_enforced() {
        assert!(matches!(
            icosphere(2.0, 12),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn tube_boundary_at_cut() {
        let c = AnalyticShrinker::exact(ShrinkerKind::Cylinder);
        let mesh = c.sample_mesh(24, 3.0).unwrap();
        assert!(!mesh.is_closed());
        let zmax = mesh
            .positions()
            .iter()
            .map(|p| p.z.abs())
            .fold(0.0, f64::max);
        assert!((zmax - 3.0).abs() < 1e-12);
        // Boundary vertices exactly at the cuts.
        for (v, p) in mesh.positions().iter().enumerate() {
            if mesh.is_boundary_vertex(v) {
                assert!((p.z.abs() - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disk_is_flat_and_validated() {
        let mesh = polar_disk(4.0, 8).unwrap();
        assert!(!mesh.is_closed());
        assert!(mesh.positions().iter().all(|p| p.z == 0.0));
        let d = mesh.diagnostics();
        assert_eq!(d.euler_characteristic, 1);
    }
}

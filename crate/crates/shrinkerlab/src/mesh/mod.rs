//! Triangle meshes for embedded surfaces in R^3.
//!
//! A mesh is validated on construction: manifold edges, consistent
//! orientation, non-degenerate triangles, and disk-like vertex stars.
//! All geometry operators assume a validated mesh, so downstream code
//! never re-checks topology.

mod curvature;
mod io;

pub use curvature::{
    quadric_fit_b_norm_sq, CurvatureReport, ShrinkerResidualReport,
};
pub use io::{obj_to_string, off_to_string, parse_obj, parse_off, read_off, write_obj, write_off};

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{MeshError, Result};

pub type Vec3 = Vector3<f64>;

/// Minimum admissible triangle area. Meshes below the floor are rejected,
/// not repaired.
pub const TRIANGLE_AREA_FLOOR: f64 = 1e-14;

const NO_TRIANGLE: usize = usize::MAX;

/// An edge of the mesh together with the one or two triangles sharing it.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    /// Endpoint vertex indices, `v[0] < v[1]`.
    pub v: [usize; 2],
    /// Incident triangles; `tris[1] == usize::MAX` on the boundary.
    pub tris: [usize; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tris[1] == NO_TRIANGLE
    }
}

/// Combinatorial adjacency derived from the triangle list.
#[derive(Debug, Clone, Default)]
pub struct Adjacency {
    pub edges: Vec<Edge>,
    /// Triangles incident to each vertex.
    pub vertex_triangles: Vec<Vec<usize>>,
    /// One-ring vertex neighbours, sorted ascending.
    pub vertex_neighbors: Vec<Vec<usize>>,
}

/// Oriented triangle mesh with validated topology.
#[derive(Debug, Clone)]
pub struct EmbeddedSurfaceMesh {
    positions: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    adjacency: Adjacency,
    boundary_vertex: Vec<bool>,
    closed: bool,
}

/// Topological and geometric summary of a validated mesh.
#[derive(Debug, Clone, Serialize)]
pub struct MeshDiagnostics {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub triangle_count: usize,
    pub euler_characteristic: i64,
    /// Genus `(2 - chi)/2`; only defined for closed meshes.
    pub genus: Option<i64>,
    pub is_closed: bool,
    pub is_orientable: bool,
    pub boundary_vertex_count: usize,
    pub total_area: f64,
    /// Largest pairwise vertex distance.
    pub extrinsic_diameter: f64,
    /// Sum of angle defects; equals `2*pi*chi` for closed meshes.
    pub angle_defect_total: f64,
    /// Scalar mean curvature `<H, nu>` per vertex.
    pub mean_curvature: Vec<f64>,
    /// Angle-defect Gauss curvature per vertex.
    pub gauss_curvature: Vec<f64>,
    /// Second-fundamental-form norm squared `H^2 - 2K` per vertex.
    pub b_norm_sq: Vec<f64>,
    /// Vertices whose one-sided stencils make curvature unreliable.
    pub boundary_vertices: Vec<bool>,
}

impl EmbeddedSurfaceMesh {
    /// Build and validate a mesh. This is the single entry point; every
    /// invariant downstream operators rely on is enforced here.
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if positions.is_empty() || triangles.is_empty() {
            return Err(MeshError::Empty.into());
        }
        for (i, p) in positions.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(MeshError::NonFinitePosition { vertex: i }.into());
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i >= positions.len() {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index: i,
                        count: positions.len(),
                    }
                    .into());
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex { triangle: t }.into());
            }
            let area = triangle_area(
                &positions[tri[0]],
                &positions[tri[1]],
                &positions[tri[2]],
            );
            if !(area >= TRIANGLE_AREA_FLOOR) {
                return Err(MeshError::DegenerateTriangle {
                    triangle: t,
                    area,
                    floor: TRIANGLE_AREA_FLOOR,
                }
                .into());
            }
        }

        let adjacency = build_adjacency(positions.len(), &triangles)?;
        check_vertex_stars(positions.len(), &triangles, &adjacency)?;

        let mut boundary_vertex = vec![false; positions.len()];
        let mut closed = true;
        for e in &adjacency.edges {
            if e.is_boundary() {
                closed = false;
                boundary_vertex[e.v[0]] = true;
                boundary_vertex[e.v[1]] = true;
            }
        }

        Ok(Self {
            positions,
            triangles,
            adjacency,
            boundary_vertex,
            closed,
        })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_vertices(&self) -> &[bool] {
        &self.boundary_vertex
    }

    /// Same combinatorics with new vertex positions. Re-validates geometry
    /// (the adjacency is untouched by vertex motion).
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self> {
        if positions.len() != self.positions.len() {
            return Err(crate::error::Error::Parameter(format!(
                "position count {} does not match vertex count {}",
                positions.len(),
                self.positions.len()
            )));
        }
        Self::new(positions, self.triangles.clone())
    }

    /// Per-triangle areas.
    pub fn triangle_areas(&self) -> Vec<f64> {
        self.triangles
            .iter()
            .map(|t| {
                triangle_area(
                    &self.positions[t[0]],
                    &self.positions[t[1]],
                    &self.positions[t[2]],
                )
            })
            .collect()
    }

    /// Barycentric lumped vertex areas (one third of each incident triangle).
    pub fn lumped_areas(&self) -> Vec<f64> {
        lumped_areas(&self.positions, &self.triangles)
    }

    /// Mixed Voronoi vertex areas; the normalization for pointwise
    /// curvature estimates.
    pub fn voronoi_areas(&self) -> Vec<f64> {
        voronoi_areas(&self.positions, &self.triangles)
    }

    /// Area-weighted, normalized vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        vertex_normals(&self.positions, &self.triangles)
    }

    /// Discrete mean curvature vectors `H = (Laplace X)` per vertex,
    /// via cotangent weights over lumped areas. Values at boundary
    /// vertices come from a one-sided stencil and are unreliable.
    pub fn mean_curvature_vectors(&self) -> Vec<Vec3> {
        mean_curvature_vectors(&self.positions, &self.triangles)
    }

    /// Total surface area.
    pub fn total_area(&self) -> f64 {
        crate::quad::pairwise_sum(&self.triangle_areas())
    }

    /// Full diagnostics; the validation itself already happened in `new`.
    pub fn diagnostics(&self) -> MeshDiagnostics {
        let v = self.positions.len();
        let e = self.adjacency.edges.len();
        let f = self.triangles.len();
        let chi = v as i64 - e as i64 + f as i64;
        let genus = if self.closed { Some((2 - chi) / 2) } else { None };

        let report = curvature::curvature_tensors_impl(self);
        let defect_total = crate::quad::pairwise_sum(&curvature::angle_defects(self));

        MeshDiagnostics {
            vertex_count: v,
            edge_count: e,
            triangle_count: f,
            euler_characteristic: chi,
            genus,
            is_closed: self.closed,
            is_orientable: true,
            boundary_vertex_count: self.boundary_vertex.iter().filter(|b| **b).count(),
            total_area: self.total_area(),
            extrinsic_diameter: extrinsic_diameter(&self.positions),
            angle_defect_total: defect_total,
            mean_curvature: curvature::scalar_mean_curvature(self),
            gauss_curvature: report.gauss,
            b_norm_sq: report.b_norm_sq,
            boundary_vertices: self.boundary_vertex.clone(),
        }
    }

    /// Per-vertex curvature triple (K, |B|^2, H^2) with their integrals.
    pub fn curvature_tensors(&self) -> CurvatureReport {
        let mut rep = curvature::curvature_tensors_impl(self);
        let areas = self.lumped_areas();
        rep.integral_gauss = crate::quad::pairwise_sum(&curvature::angle_defects(self));
        rep.integral_h_sq = crate::quad::pairwise_sum(
            &rep.h_sq
                .iter()
                .zip(&areas)
                .map(|(h2, a)| h2 * a)
                .collect::<Vec<_>>(),
        );
        rep.integral_b_norm_sq = rep.integral_h_sq - 2.0 * rep.integral_gauss;
        rep
    }

    /// Pointwise defect of the shrinker equation, `H + X^N/2`, with sup and
    /// Gaussian-weighted L2 norms over interior vertices.
    pub fn discrete_shrinker_residual(&self) -> ShrinkerResidualReport {
        curvature::discrete_shrinker_residual_impl(self)
    }
}

/// `validate` in one call: construct (rejecting non-manifold input) and
/// summarize.
pub fn validate(positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<MeshDiagnostics> {
    Ok(EmbeddedSurfaceMesh::new(positions, triangles)?.diagnostics())
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

pub fn triangle_normal_area(a: &Vec3, b: &Vec3, c: &Vec3) -> (Vec3, f64) {
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    (n / 2.0, len / 2.0)
}

pub fn lumped_areas(positions: &[Vec3], triangles: &[[usize; 3]]) -> Vec<f64> {
    let mut areas = vec![0.0; positions.len()];
    for t in triangles {
        let a = triangle_area(&positions[t[0]], &positions[t[1]], &positions[t[2]]) / 3.0;
        for &i in t {
            areas[i] += a;
        }
    }
    areas
}

pub fn vertex_normals(positions: &[Vec3], triangles: &[[usize; 3]]) -> Vec<Vec3> {
    let mut normals = vec![Vec3::zeros(); positions.len()];
    for t in triangles {
        let (n, _) = triangle_normal_area(&positions[t[0]], &positions[t[1]], &positions[t[2]]);
        for &i in t {
            normals[i] += n;
        }
    }
    for n in &mut normals {
        let len = n.norm();
        if len > 0.0 {
            *n /= len;
        }
    }
    normals
}

/// Cotangent-Laplacian of the position, `H_i = (1/A_i) sum_j w_ij (X_j - X_i)`
/// with `w_ij = (cot a_ij + cot b_ij)/2` and mixed Voronoi vertex areas.
/// Barycentric areas leave an O(1) pointwise error at irregular vertices
/// (the twelve valence-5 points of an icosphere); the mixed cells restore
/// convergence of the vertexwise values.
pub fn mean_curvature_vectors(positions: &[Vec3], triangles: &[[usize; 3]]) -> Vec<Vec3> {
    let mut accum = vec![Vec3::zeros(); positions.len()];
    for t in triangles {
        let [i, j, k] = *t;
        let (pi, pj, pk) = (&positions[i], &positions[j], &positions[k]);
        // Corner cotangents: at corner k the opposite edge is (i, j).
        let cot_i = cotangent(pi, pj, pk);
        let cot_j = cotangent(pj, pk, pi);
        let cot_k = cotangent(pk, pi, pj);
        accum[i] += (cot_k * (pj - pi) + cot_j * (pk - pi)) * 0.5;
        accum[j] += (cot_k * (pi - pj) + cot_i * (pk - pj)) * 0.5;
        accum[k] += (cot_j * (pi - pk) + cot_i * (pj - pk)) * 0.5;
    }
    let areas = voronoi_areas(positions, triangles);
    accum
        .iter()
        .zip(&areas)
        .map(|(v, a)| if *a > 0.0 { v / *a } else { Vec3::zeros() })
        .collect()
}

/// Cotangent of the angle at `apex` in triangle (apex, b, c).
fn cotangent(apex: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let u = b - apex;
    let v = c - apex;
    let cross = u.cross(&v).norm();
    if cross <= f64::MIN_POSITIVE {
        return 0.0;
    }
    u.dot(&v) / cross
}

pub fn extrinsic_diameter(positions: &[Vec3]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let d = (positions[i] - positions[j]).norm_squared();
            if d > best {
                best = d;
            }
        }
    }
    best.sqrt()
}

fn build_adjacency(vertex_count: usize, triangles: &[[usize; 3]]) -> Result<Adjacency> {
    use std::collections::HashMap;

    // (min, max) -> (edge index). Orientation bookkeeping: an oriented mesh
    // must traverse each interior edge once per direction.
    let mut map: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 3 / 2);
    // Count of traversals in (low -> high) direction per edge.
    let mut forward: Vec<u8> = Vec::new();
    let mut count: Vec<u8> = Vec::new();

    for (t, tri) in triangles.iter().enumerate() {
        for side in 0..3 {
            let a = tri[side];
            let b = tri[(side + 1) % 3];
            let key = (a.min(b), a.max(b));
            let idx = *map.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    v: [key.0, key.1],
                    tris: [NO_TRIANGLE, NO_TRIANGLE],
                });
                forward.push(0);
                count.push(0);
                edges.len() - 1
            });
            if count[idx] >= 2 {
                return Err(MeshError::NonManifoldEdge {
                    a: key.0,
                    b: key.1,
                    count: count[idx] as usize + 1,
                }
                .into());
            }
            if edges[idx].tris[0] == NO_TRIANGLE {
                edges[idx].tris[0] = t;
            } else {
                edges[idx].tris[1] = t;
            }
            count[idx] += 1;
            if a < b {
                forward[idx] += 1;
            }
        }
    }

    for (idx, e) in edges.iter().enumerate() {
        if count[idx] == 2 && forward[idx] != 1 {
            return Err(MeshError::InconsistentOrientation { a: e.v[0], b: e.v[1] }.into());
        }
    }

    let mut vertex_triangles = vec![Vec::new(); vertex_count];
    for (t, tri) in triangles.iter().enumerate() {
        for &i in tri {
            vertex_triangles[i].push(t);
        }
    }
    let mut vertex_neighbors = vec![Vec::new(); vertex_count];
    for e in &edges {
        vertex_neighbors[e.v[0]].push(e.v[1]);
        vertex_neighbors[e.v[1]].push(e.v[0]);
    }
    for n in &mut vertex_neighbors {
        n.sort_unstable();
    }

    Ok(Adjacency {
        edges,
        vertex_triangles,
        vertex_neighbors,
    })
}

/// Every vertex star must be a single triangle fan: a cycle at interior
/// vertices, a path at boundary vertices.
fn check_vertex_stars(
    vertex_count: usize,
    triangles: &[[usize; 3]],
    adj: &Adjacency,
) -> Result<()> {
    use std::collections::HashMap;

    let mut edge_lookup: HashMap<(usize, usize), [usize; 2]> =
        HashMap::with_capacity(adj.edges.len());
    for e in &adj.edges {
        edge_lookup.insert((e.v[0], e.v[1]), e.tris);
    }

    for v in 0..vertex_count {
        let star = &adj.vertex_triangles[v];
        if star.is_empty() {
            return Err(MeshError::NonDiskStar { vertex: v }.into());
        }
        // Within the star, two triangles are adjacent when they share an
        // edge through v. Count link-vertex occurrences: interior stars see
        // every link vertex twice, boundary stars see exactly two once.
        let mut link_counts: HashMap<usize, u8> = HashMap::new();
        for &t in star {
            for &w in &triangles[t] {
                if w != v {
                    *link_counts.entry(w).or_insert(0) += 1;
                }
            }
        }
        let boundary_links = link_counts.values().filter(|c| **c == 1).count();
        let ok = boundary_links == 0 || boundary_links == 2;
        if !ok || link_counts.values().any(|c| *c > 2) {
            return Err(MeshError::NonDiskStar { vertex: v }.into());
        }
        // Fan connectivity: breadth-first over edges through v.
        let star_index: HashMap<usize, usize> =
            star.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let mut seen = vec![false; star.len()];
        let mut queue = vec![0usize];
        seen[0] = true;
        while let Some(si) = queue.pop() {
            let t = star[si];
            let tri = triangles[t];
            for side in 0..3 {
                let a = tri[side];
                let b = tri[(side + 1) % 3];
                if a != v && b != v {
                    continue;
                }
                if let Some(tris) = edge_lookup.get(&(a.min(b), a.max(b))) {
                    for &ot in tris {
                        if ot != NO_TRIANGLE && ot != t {
                            if let Some(&oi) = star_index.get(&ot) {
                                if !seen[oi] {
                                    seen[oi] = true;
                                    queue.push(oi);
                                }
                            }
                        }
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(MeshError::NonDiskStar { vertex: v }.into());
        }
    }
    Ok(())
}

/// Mixed Voronoi lumped areas (circumcentric cells clamped at obtuse
/// triangles), the standard fix for pointwise curvature accuracy at
/// irregular vertices.
pub fn voronoi_areas(positions: &[Vec3], triangles: &[[usize; 3]]) -> Vec<f64> {
    let mut areas = vec![0.0; positions.len()];
    for t in triangles {
        let [i, j, k] = *t;
        let (pi, pj, pk) = (&positions[i], &positions[j], &positions[k]);
        let area = triangle_area(pi, pj, pk);
        let d2 = |a: &Vec3, b: &Vec3| (a - b).norm_squared();
        let cot_i = cotangent(pi, pj, pk);
        let cot_j = cotangent(pj, pk, pi);
        let cot_k = cotangent(pk, pi, pj);
        if cot_i <= 0.0 || cot_j <= 0.0 || cot_k <= 0.0 {
            // Obtuse triangle: half to the obtuse corner, quarters elsewhere.
            let (oi, oj, ok) = if cot_i <= 0.0 {
                (0.5, 0.25, 0.25)
            } else if cot_j <= 0.0 {
                (0.25, 0.5, 0.25)
            } else {
                (0.25, 0.25, 0.5)
            };
            areas[i] += oi * area;
            areas[j] += oj * area;
            areas[k] += ok * area;
        } else {
            areas[i] += (d2(pi, pj) * cot_k + d2(pi, pk) * cot_j) / 8.0;
            areas[j] += (d2(pj, pi) * cot_k + d2(pj, pk) * cot_i) / 8.0;
            areas[k] += (d2(pk, pi) * cot_j + d2(pk, pj) * cot_i) / 8.0;
        }
    }
    areas
}

/// Structured torus mesh, a genus-1 topology fixture (not a shrinker).
/// `seg_major` x `seg_minor` quads split into triangles, oriented outward.
pub fn structured_torus(
    major: f64,
    minor: f64,
    seg_major: usize,
    seg_minor: usize,
) -> Result<EmbeddedSurfaceMesh> {
    if !(major > minor && minor > 0.0) {
        return Err(crate::error::Error::Parameter(
            "torus needs major > minor > 0".into(),
        ));
    }
    if seg_major < 3 || seg_minor < 3 {
        return Err(crate::error::Error::Parameter(
            "torus needs at least 3 segments per direction".into(),
        ));
    }
    let mut positions = Vec::with_capacity(seg_major * seg_minor);
    for i in 0..seg_major {
        let u = 2.0 * std::f64::consts::PI * i as f64 / seg_major as f64;
        for j in 0..seg_minor {
            let v = 2.0 * std::f64::consts::PI * j as f64 / seg_minor as f64;
            let ring = major + minor * v.cos();
            positions.push(Vec3::new(
                ring * u.cos(),
                ring * u.sin(),
                minor * v.sin(),
            ));
        }
    }
    let mut triangles = Vec::with_capacity(2 * seg_major * seg_minor);
    for i in 0..seg_major {
        for j in 0..seg_minor {
            let a = i * seg_minor + j;
            let b = i * seg_minor + (j + 1) % seg_minor;
            let c = ((i + 1) % seg_major) * seg_minor + j;
            let d = ((i + 1) % seg_major) * seg_minor + (j + 1) % seg_minor;
            triangles.push([a, c, b]);
            triangles.push([b, c, d]);
        }
    }
    EmbeddedSurfaceMesh::new(positions, triangles)
}

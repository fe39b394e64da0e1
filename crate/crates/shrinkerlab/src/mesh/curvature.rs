//! Discrete curvature operators: scalar mean curvature, angle-defect Gauss
//! curvature, |B|^2 through the surface identity H^2 - 2K, and the pointwise
//! shrinker defect H + X^N/2.

use nalgebra::Vector3;
use serde::Serialize;

use super::{EmbeddedSurfaceMesh, Vec3};
use crate::quad::pairwise_sum;

/// Per-vertex curvature quantities and their integrals.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub gauss: Vec<f64>,
    pub b_norm_sq: Vec<f64>,
    pub h_sq: Vec<f64>,
    /// Integral of K over the mesh (sum of angle defects).
    pub integral_gauss: f64,
    pub integral_h_sq: f64,
    /// `integral_h_sq - 2 * integral_gauss` by the surface identity.
    pub integral_b_norm_sq: f64,
    /// Vertices where one-sided stencils make the values unreliable.
    pub boundary_flagged: Vec<bool>,
}

/// Pointwise shrinker defect with norms over interior vertices.
#[derive(Debug, Clone, Serialize)]
pub struct ShrinkerResidualReport {
    /// `H + X^N/2` per vertex (X^N taken along the discrete vertex normal).
    pub residuals: Vec<[f64; 3]>,
    /// Sup norm over interior vertices.
    pub sup_norm: f64,
    /// sqrt( integral |res|^2 rho dmu ) over interior vertices.
    pub weighted_l2: f64,
    /// Relative version: weighted_l2 / sqrt( integral rho ).
    pub weighted_l2_mean: f64,
    pub boundary_excluded: usize,
}

pub(super) fn angle_defects(mesh: &EmbeddedSurfaceMesh) -> Vec<f64> {
    let positions = mesh.positions();
    let mut angles = vec![0.0; positions.len()];
    for tri in mesh.triangles() {
        let [i, j, k] = *tri;
        angles[i] += corner_angle(&positions[i], &positions[j], &positions[k]);
        angles[j] += corner_angle(&positions[j], &positions[k], &positions[i]);
        angles[k] += corner_angle(&positions[k], &positions[i], &positions[j]);
    }
    angles
        .iter()
        .enumerate()
        .map(|(v, a)| {
            if mesh.is_boundary_vertex(v) {
                std::f64::consts::PI - a
            } else {
                2.0 * std::f64::consts::PI - a
            }
        })
        .collect()
}

fn corner_angle(apex: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let u = b - apex;
    let v = c - apex;
    let denom = u.norm() * v.norm();
    if denom <= f64::MIN_POSITIVE {
        return 0.0;
    }
    (u.dot(&v) / denom).clamp(-1.0, 1.0).acos()
}

/// Scalar mean curvature `<H, nu>` with the discrete vertex normal `nu`.
pub(super) fn scalar_mean_curvature(mesh: &EmbeddedSurfaceMesh) -> Vec<f64> {
    let hvec = mesh.mean_curvature_vectors();
    let normals = mesh.vertex_normals();
    hvec.iter().zip(&normals).map(|(h, n)| h.dot(n)).collect()
}

pub(super) fn curvature_tensors_impl(mesh: &EmbeddedSurfaceMesh) -> CurvatureReport {
    let areas = mesh.voronoi_areas();
    let defects = angle_defects(mesh);
    let gauss: Vec<f64> = defects
        .iter()
        .zip(&areas)
        .map(|(d, a)| if *a > 0.0 { d / a } else { 0.0 })
        .collect();
    let h = scalar_mean_curvature(mesh);
    let h_sq: Vec<f64> = h.iter().map(|x| x * x).collect();
    let b_norm_sq: Vec<f64> = h_sq
        .iter()
        .zip(&gauss)
        .map(|(h2, k)| h2 - 2.0 * k)
        .collect();

    let integral_gauss = pairwise_sum(&defects);
    let integral_h_sq = pairwise_sum(
        &h_sq
            .iter()
            .zip(&areas)
            .map(|(h2, a)| h2 * a)
            .collect::<Vec<_>>(),
    );

    CurvatureReport {
        gauss,
        b_norm_sq,
        h_sq,
        integral_gauss,
        integral_h_sq,
        integral_b_norm_sq: integral_h_sq - 2.0 * integral_gauss,
        boundary_flagged: mesh.boundary_vertices().to_vec(),
    }
}

pub(super) fn discrete_shrinker_residual_impl(
    mesh: &EmbeddedSurfaceMesh,
) -> ShrinkerResidualReport {
    let positions = mesh.positions();
    let hvec = mesh.mean_curvature_vectors();
    let normals = mesh.vertex_normals();
    let areas = mesh.voronoi_areas();

    let mut residuals = Vec::with_capacity(positions.len());
    let mut sup: f64 = 0.0;
    let mut l2_terms = Vec::new();
    let mut mass_terms = Vec::new();
    let mut excluded = 0usize;
    for v in 0..positions.len() {
        let xn = positions[v].dot(&normals[v]) * normals[v];
        let res = hvec[v] + 0.5 * xn;
        residuals.push([res.x, res.y, res.z]);
        if mesh.is_boundary_vertex(v) {
            excluded += 1;
            continue;
        }
        let rho = (-positions[v].norm_squared() / 4.0).exp();
        sup = sup.max(res.norm());
        l2_terms.push(res.norm_squared() * rho * areas[v]);
        mass_terms.push(rho * areas[v]);
    }
    let l2 = pairwise_sum(&l2_terms).max(0.0).sqrt();
    let mass = pairwise_sum(&mass_terms).max(f64::MIN_POSITIVE).sqrt();

    ShrinkerResidualReport {
        residuals,
        sup_norm: sup,
        weighted_l2: l2,
        weighted_l2_mean: l2 / mass,
        boundary_excluded: excluded,
    }
}

/// Independent |B|^2 estimate from a local quadric fit, used only as a
/// cross-check of the angle-defect route. Fits the height over the tangent
/// plane with a full quadratic in the two-ring and reads the shape operator
/// off the second-order part.
pub fn quadric_fit_b_norm_sq(mesh: &EmbeddedSurfaceMesh) -> Vec<f64> {
    let positions = mesh.positions();
    let normals = mesh.vertex_normals();
    let adj = mesh.adjacency();
    let mut out = vec![f64::NAN; positions.len()];

    for v in 0..positions.len() {
        // Two-ring neighbourhood.
        let mut ring: Vec<usize> = Vec::new();
        for &n1 in &adj.vertex_neighbors[v] {
            if !ring.contains(&n1) {
                ring.push(n1);
            }
            for &n2 in &adj.vertex_neighbors[n1] {
                if n2 != v && !ring.contains(&n2) {
                    ring.push(n2);
                }
            }
        }
        if ring.len() < 5 {
            continue;
        }
        let nu = normals[v];
        // Tangent frame.
        let mut t1 = if nu.x.abs() < 0.9 {
            Vector3::x().cross(&nu)
        } else {
            Vector3::y().cross(&nu)
        };
        t1 /= t1.norm();
        let t2 = nu.cross(&t1);

        // Least squares h(u,w) ~ a u^2 + b u w + c w^2 + d u + e w.
        let mut ata = nalgebra::Matrix5::<f64>::zeros();
        let mut atb = nalgebra::Vector5::<f64>::zeros();
        for &n in &ring {
            let d = positions[n] - positions[v];
            let (u, w, h) = (d.dot(&t1), d.dot(&t2), d.dot(&nu));
            let row = nalgebra::Vector5::new(u * u, u * w, w * w, u, w);
            ata += row * row.transpose();
            atb += row * h;
        }
        let Some(sol) = ata.lu().solve(&atb) else {
            continue;
        };
        let (a, b, c) = (sol[0], sol[1], sol[2]);
        let (d, e) = (sol[3], sol[4]);
        // Second fundamental form of the graph at the origin, first
        // fundamental form from the fitted slope.
        let denom = (1.0 + d * d + e * e).sqrt();
        let l = 2.0 * a / denom;
        let m = b / denom;
        let n2 = 2.0 * c / denom;
        let g11 = 1.0 + d * d;
        let g12 = d * e;
        let g22 = 1.0 + e * e;
        let det = g11 * g22 - g12 * g12;
        if det <= 0.0 {
            continue;
        }
        // Shape operator S = I^{-1} II; |B|^2 = trace(S^T S) for symmetric S
        // ~ sum of squared principal curvatures.
        let s11 = (g22 * l - g12 * m) / det;
        let s12 = (g22 * m - g12 * n2) / det;
        let s21 = (g11 * m - g12 * l) / det;
        let s22 = (g11 * n2 - g12 * m) / det;
        let mean = 0.5 * (s11 + s22);
        let gauss = s11 * s22 - s12 * s21;
        let disc = (mean * mean - gauss).max(0.0).sqrt();
        let k1 = mean + disc;
        let k2 = mean - disc;
        out[v] = k1 * k1 + k2 * k2;
    }
    out
}

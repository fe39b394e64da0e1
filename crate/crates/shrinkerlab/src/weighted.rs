//! Gaussian-weighted integral calculus on meshes: the area functional
//! `F_t`, its monotonicity scan, weighted pointwise identities, volume
//! growth profiles with their iteration-lemma certificate, the logarithmic
//! Sobolev slack, and the genus-based area/curvature budgets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{EmbeddedSurfaceMesh, Vec3};
use crate::quad::{gaussian_weight, integrate, pairwise_sum, Quadrature};
use crate::spectrum::WeightedOperators;

/// Gaussian weight context at scale `t`.
#[derive(Debug, Clone, Serialize)]
pub struct WeightContext {
    pub t: f64,
    /// `(4 pi t)^{-n/2}` with n = 2.
    pub normalization: f64,
    /// Weight at each vertex.
    pub vertex_weights: Vec<f64>,
}

impl WeightContext {
    pub fn new(mesh: &EmbeddedSurfaceMesh, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Parameter(format!("weight scale t = {t} must be positive")));
        }
        Ok(Self {
            t,
            normalization: 1.0 / (4.0 * std::f64::consts::PI * t),
            vertex_weights: mesh
                .positions()
                .iter()
                .map(|p| gaussian_weight(p, t))
                .collect(),
        })
    }
}

/// `F_t(D_r) = (4 pi t)^{-n/2} integral_{M cap B_r} exp(-|X|^2/4t) dmu`.
/// With `clip_radius = None` the integral runs over the whole mesh.
pub fn f_functional(mesh: &EmbeddedSurfaceMesh, t: f64, clip_radius: Option<f64>) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Parameter(format!("F_t needs t > 0, got {t}")));
    }
    if let Some(r) = clip_radius {
        if !(r > 0.0) {
            return Err(Error::Parameter(format!("clip radius {r} must be positive")));
        }
    }
    let mut quad = Quadrature::weighted(t);
    if let Some(r) = clip_radius {
        quad = quad.clipped(r);
    }
    let raw = integrate(mesh, quad, &[], |_, _| 1.0);
    Ok(raw / (4.0 * std::f64::consts::PI * t))
}

/// Crude upper bound for the mass lost to truncation, extruding each
/// boundary edge radially to infinity under the Gaussian decay:
/// `(4 pi t)^{-n/2} * sqrt(pi t) * sum_edges rho_t(midpoint) * length`.
pub fn truncation_tail_bound(mesh: &EmbeddedSurfaceMesh, t: f64) -> f64 {
    let positions = mesh.positions();
    let terms: Vec<f64> = mesh
        .adjacency()
        .edges
        .iter()
        .filter(|e| e.is_boundary())
        .map(|e| {
            let a = positions[e.v[0]];
            let b = positions[e.v[1]];
            let mid = 0.5 * (a + b);
            gaussian_weight(&mid, t) * (a - b).norm()
        })
        .collect();
    let norm = 1.0 / (4.0 * std::f64::consts::PI * t);
    norm * (std::f64::consts::PI * t).sqrt() * pairwise_sum(&terms)
}

/// One sample of the t-scan.
#[derive(Debug, Clone, Serialize)]
pub struct FtSample {
    pub t: f64,
    #[serde(rename = "F_t")]
    pub value: f64,
    /// Central-difference estimate of dF_t/dt (one-sided at the ends).
    #[serde(rename = "dF_dt")]
    pub derivative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FtScanReport {
    pub samples: Vec<FtSample>,
    pub f1: f64,
    /// Largest derivative sample over t >= 1.
    pub max_derivative_t_ge_1: f64,
    /// True when no derivative sample for t >= 1 exceeds `1e-6 * F_1`.
    pub monotone_after_one: bool,
    /// True when every sampled `F_t <= F_1 * (1 + tol)`.
    pub dominated_by_f1: bool,
    /// Parabolic refinement of the grid argmax.
    pub argmax_t: f64,
    pub tolerance: f64,
    pub check: String,
    /// Conditioning warning for grids tighter than 1e-6.
    pub warning: Option<String>,
}

/// Scan `t -> F_t(D_r)` over a strictly increasing positive grid.
pub fn ft_monotonicity_scan(
    mesh: &EmbeddedSurfaceMesh,
    clip_radius: Option<f64>,
    t_grid: &[f64],
    tolerance: f64,
) -> Result<FtScanReport> {
    if t_grid.len() < 3 {
        return Err(Error::Parameter("t grid needs at least 3 points".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= 0.0 {
        return Err(Error::Parameter(
            "t grid must be strictly increasing and positive".into(),
        ));
    }
    let warning = t_grid
        .windows(2)
        .any(|w| w[1] - w[0] < 1e-6)
        .then(|| "grid spacing below 1e-6: derivative estimates are ill-conditioned".to_string());

    let values: Vec<f64> = t_grid
        .iter()
        .map(|&t| f_functional(mesh, t, clip_radius))
        .collect::<Result<_>>()?;
    let nt = t_grid.len();
    let mut samples = Vec::with_capacity(nt);
    for i in 0..nt {
        let derivative = if i == 0 {
            (values[1] - values[0]) / (t_grid[1] - t_grid[0])
        } else if i == nt - 1 {
            (values[nt - 1] - values[nt - 2]) / (t_grid[nt - 1] - t_grid[nt - 2])
        } else {
            (values[i + 1] - values[i - 1]) / (t_grid[i + 1] - t_grid[i - 1])
        };
        samples.push(FtSample {
            t: t_grid[i],
            value: values[i],
            derivative,
        });
    }

    let f1 = f_functional(mesh, 1.0, clip_radius)?;
    // Monotonicity past t = 1: use derivative samples whose full stencil
    // lies in t >= 1 (a central stencil straddling the maximum at t = 1
    // picks up an O(h^2) positive bias from the increasing side), plus a
    // forward difference at the first grid point past 1.
    let mut max_derivative_t_ge_1 = f64::NEG_INFINITY;
    for i in 0..nt {
        if t_grid[i] < 1.0 {
            continue;
        }
        let stencil_lo = if i == 0 { t_grid[0] } else { t_grid[i - 1] };
        if stencil_lo >= 1.0 {
            max_derivative_t_ge_1 = max_derivative_t_ge_1.max(samples[i].derivative);
        } else if i + 1 < nt {
            let fwd = (values[i + 1] - values[i]) / (t_grid[i + 1] - t_grid[i]);
            max_derivative_t_ge_1 = max_derivative_t_ge_1.max(fwd);
        }
    }
    let monotone_after_one = max_derivative_t_ge_1 <= 1e-6 * f1;
    let dominated_by_f1 = samples.iter().all(|s| s.value <= f1 * (1.0 + tolerance));

    // Grid argmax refined by a parabola through the three surrounding nodes.
    let imax = (0..nt)
        .max_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap())
        .unwrap();
    let argmax_t = if imax == 0 || imax == nt - 1 {
        t_grid[imax]
    } else {
        let (x0, x1, x2) = (t_grid[imax - 1], t_grid[imax], t_grid[imax + 1]);
        let (y0, y1, y2) = (values[imax - 1], values[imax], values[imax + 1]);
        let denom = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
        if denom.abs() < 1e-30 {
            x1
        } else {
            x1 - 0.5 * ((x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0)) / denom
        }
    };

    Ok(FtScanReport {
        samples,
        f1,
        max_derivative_t_ge_1,
        monotone_after_one,
        dominated_by_f1,
        argmax_t,
        tolerance,
        check: "F_t is maximized at t = 1 and non-increasing past it on a shrinker".to_string(),
        warning,
    })
}

/// Residuals of the pointwise weighted identities on an approximate
/// shrinker mesh.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityResiduals {
    /// Sup over coordinates and interior vertices of `L x_i + x_i/2`.
    pub res_lx_sup: f64,
    /// Weighted L2 version (normalized by sqrt of weighted area).
    pub res_lx_l2: f64,
    /// Sup of `L |X|^2 - (2n - |X|^2)` over interior vertices.
    pub res_lx2_sup: f64,
    pub res_lx2_l2: f64,
    /// Sup of `Laplace |X|^2 - (2n - 4 H^2)` over interior vertices.
    pub res_dx2_sup: f64,
    pub res_dx2_l2: f64,
    /// `|integral |X|^2 rho - 2n integral rho| / integral rho`.
    pub res_mean: f64,
    /// Weighted L2 magnitude of `2n - |X|^2`, the natural scale of the
    /// pointwise identities (zero on the sphere where |X| is constant,
    /// order several on meshes the weight actually explores).
    pub identity_scale: f64,
    pub boundary_excluded: usize,
    pub check: String,
}

/// Evaluate the weighted identity residuals using the assembled operators
/// (`L f = -M^{-1} S f`) and the unweighted Laplacian for the pure-Laplace
/// identity.
pub fn identity_residuals(
    mesh: &EmbeddedSurfaceMesh,
    ops: &WeightedOperators,
) -> Result<IdentityResiduals> {
    let n_dim = 2.0;
    let n = mesh.vertex_count();
    let positions = mesh.positions();

    let apply_l = |f: &[f64]| -> Vec<f64> {
        let mut sf = vec![0.0; n];
        ops.stiffness.matvec(f, &mut sf);
        sf.iter()
            .zip(&ops.mass)
            .map(|(s, m)| -s / m)
            .collect()
    };

    let interior: Vec<usize> = (0..n).filter(|&v| !mesh.is_boundary_vertex(v)).collect();
    let boundary_excluded = n - interior.len();
    let areas = mesh.voronoi_areas();
    let rho: Vec<f64> = positions.iter().map(|p| gaussian_weight(p, 1.0)).collect();
    let weighted_area: f64 = pairwise_sum(
        &interior
            .iter()
            .map(|&v| rho[v] * areas[v])
            .collect::<Vec<_>>(),
    );

    let norms = |res: &[f64]| -> (f64, f64) {
        let sup = interior
            .iter()
            .map(|&v| res[v].abs())
            .fold(0.0f64, f64::max);
        let l2 = (pairwise_sum(
            &interior
                .iter()
                .map(|&v| res[v] * res[v] * rho[v] * areas[v])
                .collect::<Vec<_>>(),
        ) / weighted_area)
            .max(0.0)
            .sqrt();
        (sup, l2)
    };

    // L x_i = -x_i/2.
    let mut lx_sup = 0.0f64;
    let mut lx_l2_sq = 0.0f64;
    for axis in 0..3 {
        let x: Vec<f64> = positions.iter().map(|p| p[axis]).collect();
        let lx = apply_l(&x);
        let res: Vec<f64> = lx.iter().zip(&x).map(|(l, xi)| l + 0.5 * xi).collect();
        let (sup, l2) = norms(&res);
        lx_sup = lx_sup.max(sup);
        lx_l2_sq += l2 * l2;
    }

    // L |X|^2 = 2n - |X|^2.
    let x2: Vec<f64> = positions.iter().map(|p| p.norm_squared()).collect();
    let lx2 = apply_l(&x2);
    let res_lx2: Vec<f64> = lx2
        .iter()
        .zip(&x2)
        .map(|(l, v)| l - (2.0 * n_dim - v))
        .collect();
    let (res_lx2_sup, res_lx2_l2) = norms(&res_lx2);

    // Laplace |X|^2 = 2n - 4 H^2, with the unweighted Laplacian and the
    // discrete scalar mean curvature.
    let unweighted = crate::spectrum::assemble_with(mesh, |_, _| 1.0, |_, _| 1.0)?;
    let mut s0x2 = vec![0.0; n];
    unweighted.stiffness.matvec(&x2, &mut s0x2);
    let hvec = mesh.mean_curvature_vectors();
    let normals = mesh.vertex_normals();
    let res_dx2: Vec<f64> = (0..n)
        .map(|v| {
            let lap = -s0x2[v] / areas[v];
            let h = hvec[v].dot(&normals[v]);
            lap - (2.0 * n_dim - 4.0 * h * h)
        })
        .collect();
    let (res_dx2_sup, res_dx2_l2) = norms(&res_dx2);

    // integral |X|^2 rho = 2n integral rho (whole mesh, adaptive quadrature).
    let int_x2_rho = integrate(mesh, Quadrature::weighted(1.0), &[], |x, _| {
        x.norm_squared()
    });
    let int_rho = integrate(mesh, Quadrature::weighted(1.0), &[], |_, _| 1.0);
    let res_mean = (int_x2_rho - 2.0 * n_dim * int_rho).abs() / int_rho;

    let rhs: Vec<f64> = (0..n)
        .map(|v| 2.0 * n_dim - x2[v])
        .collect();
    let (_, identity_scale) = norms(&rhs);

    Ok(IdentityResiduals {
        res_lx_sup: lx_sup,
        res_lx_l2: lx_l2_sq.sqrt(),
        res_lx2_sup,
        res_lx2_l2,
        res_dx2_sup,
        res_dx2_l2,
        res_mean,
        identity_scale,
        boundary_excluded,
        check: "pointwise drift identities and the weighted mean identity".to_string(),
    })
}

/// Sampled `r -> Area(M cap B_r)` with the empirical growth constant.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthProfile {
    pub radii: Vec<f64>,
    pub areas: Vec<f64>,
    /// `sup_k area_k / r_k^n` with n = 2.
    pub growth_constant: f64,
    pub n: u32,
    /// Weighted mass of the annulus around |X| = sqrt(2n) with eps = 1/2.
    pub annulus_weighted_mass: f64,
    /// Raw area of the same annulus.
    pub annulus_area: f64,
    pub warning: Option<String>,
}

/// Annulus half-width for the concentration comparison.
pub const ANNULUS_EPSILON: f64 = 0.5;

pub fn growth_profile(mesh: &EmbeddedSurfaceMesh, radii: &[f64]) -> Result<GrowthProfile> {
    if radii.is_empty() {
        return Err(Error::Parameter("radius grid is empty".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::Parameter(
            "radius grid must be strictly increasing and positive".into(),
        ));
    }
    // Feature-size warning: compare against the median edge length.
    let positions = mesh.positions();
    let mut edge_lengths: Vec<f64> = mesh
        .adjacency()
        .edges
        .iter()
        .map(|e| (positions[e.v[0]] - positions[e.v[1]]).norm())
        .collect();
    edge_lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_edge = edge_lengths[edge_lengths.len() / 2];
    let warning = (radii[0] < median_edge)
        .then(|| format!("smallest radius {} is below the mesh feature size {median_edge:.3e}", radii[0]));

    let areas: Vec<f64> = radii
        .iter()
        .map(|&r| integrate(mesh, Quadrature::unweighted().clipped(r), &[], |_, _| 1.0))
        .collect();
    let growth_constant = radii
        .iter()
        .zip(&areas)
        .map(|(r, a)| a / (r * r))
        .fold(0.0f64, f64::max);

    let center = (2.0f64 * 2.0).sqrt(); // sqrt(2n), n = 2
    let lo = center - ANNULUS_EPSILON;
    let hi = center + ANNULUS_EPSILON;
    let wmass = |r: f64| integrate(mesh, Quadrature::weighted(1.0).clipped(r), &[], |_, _| 1.0);
    let amass = |r: f64| integrate(mesh, Quadrature::unweighted().clipped(r), &[], |_, _| 1.0);

    Ok(GrowthProfile {
        radii: radii.to_vec(),
        areas,
        growth_constant,
        n: 2,
        annulus_weighted_mass: wmass(hi) - wmass(lo),
        annulus_area: amass(hi) - amass(lo),
        warning,
    })
}

/// Certificate for the doubling-iteration growth lemma: if a monotone
/// non-negative `f` satisfies `f(r) <= C1 r^n f(r/2)` past `C2 > 1`, then
/// `f(r) <= C3 exp(2n (log r)^2)` with `C3` depending only on
/// `(n, C1, C2, f(C2))`.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthLemmaCertificate {
    pub n: f64,
    pub c1: f64,
    pub c2: f64,
    /// Constant reconstructed from the iteration bound.
    pub c3: f64,
    pub hypothesis_ok: bool,
    pub conclusion_ok: bool,
    /// Sample pairs (r, r/2) actually checked.
    pub pairs_checked: usize,
    pub failures: Vec<String>,
}

/// Compute the iteration constant: majorize the dyadic count
/// `k = floor(log2(r/C2)) + 1` by `log2(r/C2) + 1` and maximize
/// `k(r) (log C1 + n log r) - 2n (log r)^2` in closed form (a downward
/// parabola in `log r`).
fn growth_lemma_c3(n: f64, c1: f64, c2: f64, f_c2: f64) -> f64 {
    if f_c2 <= 0.0 {
        return 0.0;
    }
    let a = c2.ln();
    let b = c1.ln();
    let log2 = std::f64::consts::LN_2;
    // h(s) = ((s - a)/log2 + 1)(b + n s) - 2 n s^2, s = log r >= a.
    let qa = n / log2 - 2.0 * n;
    let qb = b / log2 + n * (1.0 - a / log2);
    let qc = (1.0 - a / log2) * b;
    debug_assert!(qa < 0.0);
    let vertex = -qb / (2.0 * qa);
    let h = |s: f64| qa * s * s + qb * s + qc;
    let best = if vertex > a { h(vertex) } else { h(a) };
    f_c2.ln().exp() * best.max(0.0).exp()
}

/// Check the lemma's hypothesis and conclusion on sampled data.
pub fn growth_lemma_check(
    radii: &[f64],
    values: &[f64],
    n: f64,
    c1: f64,
    c2: f64,
) -> Result<GrowthLemmaCertificate> {
    if radii.len() != values.len() || radii.is_empty() {
        return Err(Error::Parameter("radii and values must match and be non-empty".into()));
    }
    if !(c2 > 1.0) || !(c1 > 0.0) || !(n > 0.0) {
        return Err(Error::Parameter("need C1 > 0, C2 > 1, n > 0".into()));
    }

    let mut failures = Vec::new();
    let mut hypothesis_ok = true;

    // Monotone non-decreasing and non-negative.
    if values.iter().any(|v| *v < 0.0) {
        hypothesis_ok = false;
        failures.push("negative sample".to_string());
    }
    if values.windows(2).zip(radii.windows(2)).any(|(v, _)| v[1] < v[0] * (1.0 - 1e-12)) {
        hypothesis_ok = false;
        failures.push("samples not monotone non-decreasing".to_string());
    }

    // Doubling hypothesis at every sampled pair (r, r/2).
    let mut pairs_checked = 0usize;
    for (i, &r) in radii.iter().enumerate() {
        if r < c2 {
            continue;
        }
        let half = r / 2.0;
        let Some(j) = radii
            .iter()
            .position(|&s| (s - half).abs() <= 1e-9 * half.max(1.0))
        else {
            continue;
        };
        pairs_checked += 1;
        let bound = c1 * r.powf(n) * values[j];
        if values[i] > bound * (1.0 + 1e-12) {
            hypothesis_ok = false;
            failures.push(format!(
                "hypothesis fails at r = {r}: f(r) = {} > C1 r^n f(r/2) = {bound}",
                values[i]
            ));
        }
    }
    if pairs_checked == 0 {
        hypothesis_ok = false;
        failures.push("no sample pairs (r, r/2) available past C2".to_string());
    }

    // f(C2) taken at the first sample >= C2 (monotonicity makes this an
    // upper bound for f(C2), which is the direction the proof uses).
    let f_c2 = radii
        .iter()
        .position(|&r| r >= c2)
        .map(|i| values[i])
        .unwrap_or(0.0);
    let c3 = growth_lemma_c3(n, c1, c2, f_c2);

    let mut conclusion_ok = true;
    if hypothesis_ok {
        for (i, &r) in radii.iter().enumerate() {
            if r < c2 {
                continue;
            }
            let bound = c3 * (2.0 * n * r.ln() * r.ln()).exp();
            if values[i] > bound * (1.0 + 1e-9) {
                conclusion_ok = false;
                failures.push(format!(
                    "conclusion fails at r = {r}: f(r) = {} > C3 e^(2n log^2 r) = {bound}",
                    values[i]
                ));
            }
        }
    } else {
        conclusion_ok = false;
    }

    Ok(GrowthLemmaCertificate {
        n,
        c1,
        c2,
        c3,
        hypothesis_ok,
        conclusion_ok,
        pairs_checked,
        failures,
    })
}

/// Log-Sobolev slacks, one per function:
/// `16 integral |grad f|^2 rho + 4n integral f^2 rho - integral |X|^2 f^2 rho`,
/// each required to stay above -tol with tol 5% of the right-hand side.
#[derive(Debug, Clone, Serialize)]
pub struct LogSobolevReport {
    #[serde(rename = "slack")]
    pub slacks: Vec<f64>,
    pub rhs: Vec<f64>,
    pub violations: usize,
    pub tolerance: f64,
    pub check: String,
}

pub fn log_sobolev_check(
    mesh: &EmbeddedSurfaceMesh,
    ops: &WeightedOperators,
    functions: &[Vec<f64>],
    tolerance: f64,
) -> LogSobolevReport {
    let n_dim = 2.0;
    let positions = mesh.positions();
    let mut slacks = Vec::with_capacity(functions.len());
    let mut rhs_all = Vec::with_capacity(functions.len());
    let mut violations = 0usize;
    for f in functions {
        let grad = ops.stiffness.quadratic_form(f);
        let f2: f64 = f.iter().zip(&ops.mass).map(|(a, m)| a * a * m).sum();
        let x2f2: f64 = f
            .iter()
            .zip(&ops.mass)
            .zip(positions)
            .map(|((a, m), p)| a * a * m * p.norm_squared())
            .sum();
        let rhs = 16.0 * grad + 4.0 * n_dim * f2;
        let slack = rhs - x2f2;
        if slack < -tolerance * rhs {
            violations += 1;
        }
        slacks.push(slack);
        rhs_all.push(rhs);
    }
    LogSobolevReport {
        slacks,
        rhs: rhs_all,
        violations,
        tolerance,
        check: "log-Sobolev: integral |X|^2 f^2 rho <= 16 integral |grad f|^2 rho + 4n integral f^2 rho"
            .to_string(),
    }
}

/// One bound line of the genus budget report.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetLine {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    #[serde(rename = "bound_satisfied")]
    pub satisfied: bool,
}

/// Genus-driven area/entropy/curvature budgets for closed meshes.
#[derive(Debug, Clone, Serialize)]
pub struct GenusBudgetReport {
    pub genus: i64,
    pub diameter: f64,
    pub weighted_area: f64,
    pub total_area: f64,
    pub integral_b_norm_sq: f64,
    pub lines: Vec<BudgetLine>,
    /// Relative mismatch of `integral |B|^2` against `Area - 4 pi chi`.
    pub curvature_identity_mismatch: f64,
    pub check: String,
}

pub fn genus_budgets(mesh: &EmbeddedSurfaceMesh, radii: &[f64]) -> Result<GenusBudgetReport> {
    if !mesh.is_closed() {
        return Err(Error::Parameter("genus budgets need a closed mesh".into()));
    }
    let diag = mesh.diagnostics();
    let genus = diag.genus.unwrap_or(0);
    let g = genus as f64;
    let pi = std::f64::consts::PI;

    let weighted_area = integrate(mesh, Quadrature::weighted(1.0), &[], |_, _| 1.0);
    let mut lines = Vec::new();
    lines.push(BudgetLine {
        name: "weighted_area_lt_32pi_1pg".to_string(),
        value: weighted_area,
        bound: 32.0 * pi * (1.0 + g),
        satisfied: weighted_area < 32.0 * pi * (1.0 + g),
    });

    let quadratic_bound = |r: f64| 32.0 * (0.25f64).exp() * pi * (1.0 + g) * r * r;
    for &r in radii {
        let area_r = integrate(mesh, Quadrature::unweighted().clipped(r), &[], |_, _| 1.0);
        lines.push(BudgetLine {
            name: format!("clipped_area_le_bound_r_{r}"),
            value: area_r,
            bound: quadratic_bound(r),
            satisfied: area_r <= quadratic_bound(r),
        });
    }

    let curv = mesh.curvature_tensors();
    let chi = diag.euler_characteristic as f64;
    let identity_rhs = diag.total_area - 4.0 * pi * chi;
    let mismatch = (curv.integral_b_norm_sq - identity_rhs).abs()
        / identity_rhs.abs().max(f64::MIN_POSITIVE);
    let total_bound =
        32.0 * (0.25f64).exp() * pi * (1.0 + g) * (diag.extrinsic_diameter + 2.0).powi(2)
            + 8.0 * pi * (g - 1.0);
    lines.push(BudgetLine {
        name: "total_curvature_le_genus_diameter_bound".to_string(),
        value: curv.integral_b_norm_sq,
        bound: total_bound,
        satisfied: curv.integral_b_norm_sq <= total_bound,
    });

    Ok(GenusBudgetReport {
        genus,
        diameter: diag.extrinsic_diameter,
        weighted_area,
        total_area: diag.total_area,
        integral_b_norm_sq: curv.integral_b_norm_sq,
        lines,
        curvature_identity_mismatch: mismatch,
        check: "genus budgets: weighted area, clipped-area growth, total curvature".to_string(),
    })
}

/// Deterministic low-degree polynomial samples restricted to the mesh, the
/// crate's stand-in for random band-limited functions.
pub fn random_polynomial_functions(
    mesh: &EmbeddedSurfaceMesh,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let monomials: Vec<Box<dyn Fn(&Vec3) -> f64>> = vec![
        Box::new(|_| 1.0),
        Box::new(|p| p.x),
        Box::new(|p| p.y),
        Box::new(|p| p.z),
        Box::new(|p| p.x * p.y),
        Box::new(|p| p.y * p.z),
        Box::new(|p| p.x * p.z),
        Box::new(|p| p.x * p.x - p.y * p.y),
        Box::new(|p| 2.0 * p.z * p.z - p.x * p.x - p.y * p.y),
        Box::new(|p| p.x * p.y * p.z),
        Box::new(|p| p.x * p.x * p.x - 3.0 * p.x * p.y * p.y),
        Box::new(|p| p.z * p.z * p.z - p.z * p.x * p.x),
    ];
    (0..count)
        .map(|_| {
            let coeffs: Vec<f64> = (0..monomials.len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            mesh.positions()
                .iter()
                .map(|p| {
                    monomials
                        .iter()
                        .zip(&coeffs)
                        .map(|(m, c)| c * m(p))
                        .sum()
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{icosphere, polar_disk};

    // Closed forms used throughout: on S^2(2), F_t = (4/t) exp(-1/t);
    // on the plane, F_t = 1; on the cylinder of radius sqrt(2),
    // F_t = sqrt(2 pi / t) exp(-1/(2t)).

    #[test]
    fn f_functional_sphere_closed_form() {
        let mesh = icosphere(2.0, 4).unwrap();
        let f1 = f_functional(&mesh, 1.0, None).unwrap();
        let expect = 4.0 / std::f64::consts::E;
        assert!(
            (f1 - expect).abs() <= 0.005 * expect,
            "F_1 = {f1}, expect {expect}"
        );
    }

    #[test]
    fn f_functional_plane_is_one() {
        let mesh = polar_disk(20.0, 20).unwrap();
        let f1 = f_functional(&mesh, 1.0, None).unwrap();
        assert!((f1 - 1.0).abs() <= 1e-3, "F_1 = {f1}");
    }

    #[test]
    fn f_functional_rejects_bad_t() {
        let mesh = icosphere(2.0, 1).unwrap();
        assert!(f_functional(&mesh, 0.0, None).is_err());
        assert!(f_functional(&mesh, -1.0, None).is_err());
    }

    #[test]
    fn growth_lemma_examples() {
        // f(r) = r^2 with C1 = 4, C2 = 2.
        let radii: Vec<f64> = (0..8).map(|k| 2.0f64.powi(k)).collect();
        let vals: Vec<f64> = radii.iter().map(|r| r * r).collect();
        let cert = growth_lemma_check(&radii, &vals, 2.0, 4.0, 2.0).unwrap();
        assert!(cert.hypothesis_ok, "{:?}", cert.failures);
        assert!(cert.conclusion_ok, "{:?}", cert.failures);

        // Constants satisfy both with C1 = 1.
        let ones = vec![1.0; radii.len()];
        let cert1 = growth_lemma_check(&radii, &ones, 2.0, 1.0, 2.0).unwrap();
        assert!(cert1.hypothesis_ok && cert1.conclusion_ok);

        // Exponentials violate the hypothesis at large r.
        let exps: Vec<f64> = radii.iter().map(|r| r.exp()).collect();
        let cert2 = growth_lemma_check(&radii, &exps, 2.0, 1.0, 2.0).unwrap();
        assert!(!cert2.hypothesis_ok);
    }
}

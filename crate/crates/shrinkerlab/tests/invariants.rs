//! Cross-module invariants: exact combinatorial identities, refinement
//! convergence, quadrature consistency, and property tests over the
//! closed-form catalog.

use proptest::prelude::*;

use shrinkerlab::catalog::{
    icosphere, make_shrinker, polar_disk, tube, AnalyticShrinker, ShrinkerKind, ShrinkerParams,
};
use shrinkerlab::mesh::{quadric_fit_b_norm_sq, structured_torus, Vec3};
use shrinkerlab::quad::{integrate, Quadrature};
use shrinkerlab::spectrum::{assemble, first_eigenpairs, EigenOptions};
use shrinkerlab::weighted::f_functional;

const PI: f64 = std::f64::consts::PI;

#[test]
fn gauss_bonnet_exact_on_closed_meshes() {
    for (mesh, chi) in [
        (icosphere(2.0, 3).unwrap(), 2.0),
        (icosphere(0.37, 2).unwrap(), 2.0),
        (structured_torus(2.0, 0.6, 28, 14).unwrap(), 0.0),
    ] {
        let d = mesh.diagnostics();
        assert!(
            (d.angle_defect_total - 2.0 * PI * chi).abs() <= 1e-9,
            "defect total {} vs {}",
            d.angle_defect_total,
            2.0 * PI * chi
        );
    }
    // Flat open mesh: boundary defects close the circle, chi = 1.
    let disk = polar_disk(3.0, 6).unwrap();
    let d = disk.diagnostics();
    assert!((d.angle_defect_total - 2.0 * PI).abs() <= 1e-9);
}

#[test]
fn torus_diagnostics() {
    let torus = structured_torus(2.0, 0.7, 24, 12).unwrap();
    let d = torus.diagnostics();
    assert_eq!(d.euler_characteristic, 0);
    assert_eq!(d.genus, Some(1));
    assert!(d.is_closed);
    // Integral of K vanishes by Gauss-Bonnet.
    let curv = torus.curvature_tensors();
    assert!(curv.integral_gauss.abs() <= 1e-9);
}

#[test]
fn curvature_integral_identity_is_definitional() {
    for mesh in [
        icosphere(2.0, 3).unwrap(),
        structured_torus(1.5, 0.5, 20, 10).unwrap(),
    ] {
        let curv = mesh.curvature_tensors();
        let d = mesh.diagnostics();
        let expect = curv.integral_h_sq - 2.0 * curv.integral_gauss;
        assert!((curv.integral_b_norm_sq - expect).abs() <= 1e-9);
        assert!(
            (curv.integral_gauss - 2.0 * PI * d.euler_characteristic as f64).abs() <= 1e-9
        );
    }
}

#[test]
fn quadric_fit_cross_checks_b_norm() {
    // |B|^2 = 1/2 on the radius-2 sphere; the quadric fit is an independent
    // estimator and must agree within 10% on refined meshes.
    let mesh = icosphere(2.0, 4).unwrap();
    let fitted = quadric_fit_b_norm_sq(&mesh);
    let identity = mesh.curvature_tensors().b_norm_sq;
    let mut worst = 0.0f64;
    for (f, i) in fitted.iter().zip(&identity) {
        if f.is_nan() {
            continue;
        }
        worst = worst.max((f - i).abs() / 0.5);
    }
    assert!(worst <= 0.10, "worst relative disagreement {worst}");
}

#[test]
fn shrinker_residual_refinement_monotone() {
    let mut last_sup = f64::INFINITY;
    let mut last_l2 = f64::INFINITY;
    for level in 2..=5 {
        let rep = icosphere(2.0, level).unwrap().discrete_shrinker_residual();
        assert!(
            rep.sup_norm < last_sup && rep.weighted_l2 < last_l2,
            "level {level}: sup {} l2 {}",
            rep.sup_norm,
            rep.weighted_l2
        );
        last_sup = rep.sup_norm;
        last_l2 = rep.weighted_l2;
    }
}

#[test]
fn eigenvalue_refinement_second_order() {
    let mut errors = Vec::new();
    for level in 2..=5 {
        let mesh = icosphere(2.0, level).unwrap();
        let ops = assemble(&mesh).unwrap();
        let res = first_eigenpairs(&ops, 1, &EigenOptions::default()).unwrap();
        errors.push((res.lambdas[0] - 0.5).abs());
    }
    for w in errors.windows(2) {
        assert!(
            w[1] <= 0.35 * w[0],
            "refinement ratio {} too slow: {errors:?}",
            w[1] / w[0]
        );
    }
}

#[test]
fn ft_quadrature_consistency_across_levels() {
    // Successive levels must differ by at most 4x the finer level's error
    // against the closed form (second-order convergence of the area).
    let exact = 4.0 / std::f64::consts::E;
    let f3 = f_functional(&icosphere(2.0, 3).unwrap(), 1.0, None).unwrap();
    let f4 = f_functional(&icosphere(2.0, 4).unwrap(), 1.0, None).unwrap();
    let fine_error = (f4 - exact).abs();
    assert!(
        (f3 - f4).abs() <= 4.0 * fine_error,
        "level gap {} vs fine error {fine_error}",
        (f3 - f4).abs()
    );
}

#[test]
fn growth_profile_examples() {
    // Flat disk: area pi r^2; whole sphere constant past its radius.
    let disk = polar_disk(8.0, 24).unwrap();
    let prof = shrinkerlab::weighted::growth_profile(&disk, &[2.0, 4.0, 6.0]).unwrap();
    for (r, a) in prof.radii.iter().zip(&prof.areas) {
        let exact = PI * r * r;
        assert!((a - exact).abs() <= 0.005 * exact, "disk area {a} vs {exact}");
    }
    let sphere = icosphere(2.0, 3).unwrap();
    let prof_s = shrinkerlab::weighted::growth_profile(&sphere, &[2.5, 3.0, 5.0]).unwrap();
    let full = sphere.total_area();
    for a in &prof_s.areas {
        assert!((a - full).abs() <= 1e-12 * full);
    }
}

#[test]
fn truncated_cylinder_identities_within_tolerance() {
    let mesh = tube(std::f64::consts::SQRT_2, 48, 8.0).unwrap();
    let ops = assemble(&mesh).unwrap();
    let rep = shrinkerlab::weighted::identity_residuals(&mesh, &ops).unwrap();
    assert!(rep.res_mean <= 0.01, "res_mean {}", rep.res_mean);
    assert!(rep.res_lx_l2 <= 0.05, "res_lx_l2 {}", rep.res_lx_l2);
    assert!(rep.res_lx2_l2 <= 0.05, "res_lx2_l2 {}", rep.res_lx2_l2);
}

#[test]
fn sphere_identities_quadrature_only() {
    let mesh = icosphere(2.0, 4).unwrap();
    let ops = assemble(&mesh).unwrap();
    let rep = shrinkerlab::weighted::identity_residuals(&mesh, &ops).unwrap();
    // |X|^2 = 4 = 2n exactly at the vertices, so the mean identity carries
    // no discretization error at all.
    assert!(rep.res_mean <= 1e-12, "res_mean {}", rep.res_mean);
    assert!(rep.res_lx2_l2 <= 0.05, "res_lx2_l2 {}", rep.res_lx2_l2);
}

#[test]
fn conformal_comparison_on_sphere() {
    // Constant conformal factor exp(-1) rescales the metric, lambda1
    // becomes e/2, which is also exactly the genus-0 bound 8 pi / (16 pi/e).
    let mesh = icosphere(2.0, 3).unwrap();
    let rep =
        shrinkerlab::spectrum::conformal_eigen(&mesh, &EigenOptions::default(), 0.02).unwrap();
    let expect = std::f64::consts::E / 2.0;
    assert!(
        (rep.lambda1_conformal - expect).abs() <= 0.01 * expect,
        "conformal lambda1 {} vs {expect}",
        rep.lambda1_conformal
    );
    assert!(rep.comparison_ok);
    assert!(rep.bound_ok);
    assert!((rep.yang_yau_bound - expect).abs() <= 0.01 * expect);
}

#[test]
fn log_sobolev_on_relaxed_solver_output() {
    // Property suite on a solver product rather than a catalog mesh.
    let reference = icosphere(2.0, 2).unwrap();
    let opts = shrinkerlab::solver::RelaxOptions::default().with_catalog_floor(&reference);
    let start = icosphere(1.7, 2).unwrap();
    let (relaxed, trace) = shrinkerlab::solver::relax(&start, &opts).unwrap();
    assert!(trace.converged);
    let ops = assemble(&relaxed).unwrap();
    let funcs = shrinkerlab::weighted::random_polynomial_functions(&relaxed, 100, 0x5EED);
    let rep = shrinkerlab::weighted::log_sobolev_check(&relaxed, &ops, &funcs, 0.05);
    assert_eq!(rep.violations, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Frame splitting is exact for every catalog exemplar and parameter.
    #[test]
    fn frame_split_orthogonality(
        kind_idx in 0usize..3,
        radius in 0.3f64..4.0,
        a in 0.0f64..3.0,
        b in -6.0f64..6.0,
    ) {
        let kind = [ShrinkerKind::Plane, ShrinkerKind::Sphere, ShrinkerKind::Cylinder][kind_idx];
        let shrinker = make_shrinker(
            kind,
            ShrinkerParams { radius, offset: [0.0; 3] },
        ).unwrap();
        let a = if kind == ShrinkerKind::Sphere { a.min(std::f64::consts::PI) } else { a };
        let frame = shrinker.eval_frame(a, b).unwrap();
        let x = Vec3::from(frame.position);
        let xn = Vec3::from(frame.x_normal);
        let xt = Vec3::from(frame.x_tangent);
        let nu = Vec3::from(frame.normal);
        prop_assert!((x - (xn + xt)).norm() <= 1e-12 * (1.0 + x.norm()));
        prop_assert!(xn.dot(&xt).abs() <= 1e-12 * (1.0 + x.norm_squared()));
        prop_assert!((x.norm_squared() - xn.norm_squared() - xt.norm_squared()).abs() <= 1e-10);
        prop_assert!((nu.norm() - 1.0).abs() <= 1e-12);
        // H parallel to the normal in codimension one.
        let h = Vec3::from(frame.mean_curvature);
        prop_assert!(h.cross(&nu).norm() <= 1e-12 * (1.0 + h.norm()));
    }

    /// Exact exemplars satisfy the defining equation to machine precision.
    #[test]
    fn exact_exemplars_have_zero_residual(
        kind_idx in 0usize..3,
        a in 0.0f64..3.0,
        b in -6.0f64..6.0,
    ) {
        let kind = [ShrinkerKind::Plane, ShrinkerKind::Sphere, ShrinkerKind::Cylinder][kind_idx];
        let shrinker = AnalyticShrinker::exact(kind);
        let a = if kind == ShrinkerKind::Sphere { a.min(std::f64::consts::PI) } else { a };
        let res = shrinker.shrinker_residual(a, b).unwrap();
        prop_assert!(res.norm() <= 1e-12);
    }

    /// Ball-clipped integrals are monotone in the radius and bounded by the
    /// total, for arbitrary clip radii.
    #[test]
    fn clipped_area_monotone(r1 in 0.5f64..5.0, dr in 0.1f64..3.0) {
        let mesh = icosphere(2.0, 2).unwrap();
        let a1 = integrate(&mesh, Quadrature::unweighted().clipped(r1), &[], |_, _| 1.0);
        let a2 = integrate(
            &mesh,
            Quadrature::unweighted().clipped(r1 + dr),
            &[],
            |_, _| 1.0,
        );
        let total = mesh.total_area();
        prop_assert!(a1 <= a2 + 1e-9);
        prop_assert!(a2 <= total * (1.0 + 1e-12));
    }

    /// The range grammar only produces sorted grids within bounds.
    #[test]
    fn range_grammar_sorted(a in -100.0f64..100.0, len in 0.001f64..50.0, step in 0.01f64..5.0) {
        let b = a + len;
        let spec = format!("{a}:{b}:{step}");
        if let Ok(grid) = shrinkerlab::config::parse_range(&spec) {
            prop_assert!(!grid.is_empty());
            prop_assert!(grid.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(grid[0] >= a - 1e-9 && *grid.last().unwrap() <= b + 1e-9);
        }
    }
}

#[test]
fn eigenfunctions_weighted_orthonormal() {
    let mesh = icosphere(2.0, 3).unwrap();
    let ops = assemble(&mesh).unwrap();
    let res = first_eigenpairs(&ops, 3, &EigenOptions::default()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = res.eigenfunctions[i]
                .iter()
                .zip(&res.eigenfunctions[j])
                .zip(&ops.mass)
                .map(|((a, b), m)| a * b * m)
                .sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!(
                (dot - expect).abs() <= 1e-8,
                "<u{i}, u{j}>_M = {dot}"
            );
        }
    }
    assert!(res.constraint_violation <= 1e-8);
}

#[test]
fn genus_one_conformal_area_bound() {
    // The genus-dependent bound lambda1(conformal) * weighted area
    // <= 8 pi (1 + g) holds for any closed genus-1 surface, shrinker or
    // not, so the torus fixture exercises it.
    let torus = structured_torus(2.0, 0.7, 28, 14).unwrap();
    let rep =
        shrinkerlab::spectrum::conformal_eigen(&torus, &EigenOptions::default(), 0.05).unwrap();
    assert_eq!(rep.genus, 1);
    let product = rep.lambda1_conformal * rep.weighted_area;
    assert!(
        product <= 16.0 * PI * 1.05,
        "lambda1 * weighted area = {product} vs {}",
        16.0 * PI
    );
    assert!(rep.bound_ok);
}

#[test]
fn weight_context_invariants() {
    let mesh = tube(std::f64::consts::SQRT_2, 16, 6.0).unwrap();
    let ctx = shrinkerlab::weighted::WeightContext::new(&mesh, 1.0).unwrap();
    assert!(ctx
        .vertex_weights
        .iter()
        .all(|w| *w > 0.0 && *w <= 1.0));
    assert!((ctx.normalization - 1.0 / (4.0 * PI)).abs() <= 1e-15);
    assert!(shrinkerlab::weighted::WeightContext::new(&mesh, 0.0).is_err());
}

#[test]
fn mean_curvature_magnitude_bands() {
    // |H| = n/r on the sphere, 1/r on the cylinder, 0 on the plane.
    let sphere = icosphere(2.0, 4).unwrap();
    let h = sphere.mean_curvature_vectors();
    let mean: f64 = h.iter().map(|v| v.norm()).sum::<f64>() / h.len() as f64;
    assert!((0.99..=1.01).contains(&mean), "sphere mean |H| = {mean}");

    let cyl = tube(std::f64::consts::SQRT_2, 48, 6.0).unwrap();
    let hc = cyl.mean_curvature_vectors();
    let expect = 1.0 / std::f64::consts::SQRT_2;
    let mut count = 0usize;
    let mut acc = 0.0;
    for (v, h) in hc.iter().enumerate() {
        if !cyl.is_boundary_vertex(v) {
            acc += h.norm();
            count += 1;
        }
    }
    let mean_c = acc / count as f64;
    assert!(
        (mean_c - expect).abs() <= 0.01 * expect,
        "cylinder mean |H| = {mean_c} vs {expect}"
    );

    let disk = polar_disk(6.0, 12).unwrap();
    let hd = disk.mean_curvature_vectors();
    for (v, h) in hd.iter().enumerate() {
        if !disk.is_boundary_vertex(v) {
            assert!(h.norm() <= 1e-8, "flat interior |H| = {}", h.norm());
        }
    }
}

#[test]
fn opposite_orientation_rejected() {
    use shrinkerlab::error::{Error, MeshError};
    // Both triangles traverse the shared edge (0,1) in the same direction.
    let positions = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.5, -1.0, 0.0),
    ];
    let triangles = vec![[0, 1, 2], [0, 1, 3]];
    let err = shrinkerlab::mesh::EmbeddedSurfaceMesh::new(positions, triangles).unwrap_err();
    assert!(
        matches!(
            err,
            Error::Mesh(MeshError::InconsistentOrientation { a: 0, b: 1 })
        ),
        "got {err:?}"
    );
}

#[test]
fn weighted_stiffness_is_psd() {
    use rand::Rng;
    use rand::SeedableRng;
    let mesh = icosphere(2.0, 2).unwrap();
    let ops = assemble(&mesh).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EED);
    for _ in 0..32 {
        let f: Vec<f64> = (0..mesh.vertex_count())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        assert!(ops.stiffness.quadratic_form(&f) >= -1e-12);
    }
}

#[test]
fn discrete_residual_closed_forms() {
    // Flat disk through the origin: both defect terms vanish identically.
    let disk = polar_disk(6.0, 12).unwrap();
    let rep = disk.discrete_shrinker_residual();
    assert!(rep.sup_norm <= 1e-8, "disk interior sup {}", rep.sup_norm);

    // Radius-1 sphere: |H + X^N/2| = |-n/r + r/2| = 3/2 pointwise.
    let rep1 = icosphere(1.0, 4).unwrap().discrete_shrinker_residual();
    assert!(
        (rep1.sup_norm - 1.5).abs() <= 0.02 * 1.5,
        "radius-1 sup {}",
        rep1.sup_norm
    );
}

#[test]
fn rayleigh_quotient_examples() {
    use shrinkerlab::spectrum::rayleigh_quotient;
    let mesh = icosphere(2.0, 3).unwrap();
    let ops = assemble(&mesh).unwrap();
    let res = first_eigenpairs(&ops, 1, &EigenOptions::default()).unwrap();
    // The first eigenfunction realizes its eigenvalue exactly.
    let q = rayleigh_quotient(&ops, &res.eigenfunctions[0]).unwrap();
    assert!((q - res.lambdas[0]).abs() <= 1e-10);

    // Any admissible function sits at or above lambda1.
    let cyl = tube(std::f64::consts::SQRT_2, 24, 6.0).unwrap();
    let ops_c = assemble(&cyl).unwrap();
    let res_c = first_eigenpairs(&ops_c, 1, &EigenOptions::default()).unwrap();
    let x2: Vec<f64> = cyl.positions().iter().map(|p| p.norm_squared()).collect();
    let q_c = rayleigh_quotient(&ops_c, &x2).unwrap();
    assert!(q_c >= res_c.lambdas[0] - 1e-9, "{q_c} vs {}", res_c.lambdas[0]);
}

#[test]
fn catalog_meshes_oriented_outward() {
    // Scalar mean curvature <H, nu> is negative for the outward normal on
    // spheres and tubes; the sign convention every check relies on.
    let sphere = icosphere(2.0, 2).unwrap();
    for (v, nu) in sphere.vertex_normals().iter().enumerate() {
        assert!(nu.dot(&sphere.positions()[v]) > 0.0, "inward normal at {v}");
    }
    let mean_h: f64 = {
        let d = sphere.diagnostics();
        d.mean_curvature.iter().sum::<f64>() / d.mean_curvature.len() as f64
    };
    assert!((mean_h + 1.0).abs() <= 0.01, "sphere <H,nu> mean = {mean_h}");

    let cyl = tube(std::f64::consts::SQRT_2, 24, 4.0).unwrap();
    for (v, nu) in cyl.vertex_normals().iter().enumerate() {
        let p = cyl.positions()[v];
        let radial = Vec3::new(p.x, p.y, 0.0);
        assert!(nu.dot(&radial) > 0.0, "inward normal at {v}");
    }
}

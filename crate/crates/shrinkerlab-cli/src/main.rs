//! Command-line runner: every verification as a subcommand, machine-readable
//! JSON/CSV reports, and an `all` mode that runs the whole matrix.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails its
//! tolerance, 2 on usage or input errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use shrinkerlab::catalog::{AnalyticShrinker, ShrinkerKind};
use shrinkerlab::config as cfg;
use shrinkerlab::error::Error as LabError;
use shrinkerlab::mesh::{read_off, write_off, EmbeddedSurfaceMesh};
use shrinkerlab::reilly::{barrier_verify, reilly_residual, BarrierSpec};
use shrinkerlab::solver::{mean_radius, relax, residual_energy, RelaxOptions};
use shrinkerlab::spectrum::{
    assemble, conformal_eigen, coordinate_eigen_residual, eigenvalue_bound_report,
    first_eigenpairs, EigenOptions,
};
use shrinkerlab::weighted::{
    ft_monotonicity_scan, genus_budgets, growth_lemma_check, growth_profile,
    identity_residuals, log_sobolev_check, random_polynomial_functions, truncation_tail_bound,
};

#[derive(Parser)]
#[command(name = "shrinkerlab", version, about = "Numerical checks for self-shrinker geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for reports.
    #[arg(long, global = true, default_value = "reports")]
    out: PathBuf,
    /// Seed (hex like 0x5EED or decimal).
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Tolerance override for the command's primary check.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Args, Clone)]
struct MeshSource {
    /// Catalog exemplar: plane | sphere | cylinder.
    #[arg(long)]
    catalog: Option<String>,
    /// Mesh file (ASCII OFF).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Catalog config file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog resolution (icosphere subdivision, tube vertices around,
    /// disk ring doubling).
    #[arg(long, default_value_t = 4)]
    level: u32,
    /// Catalog radius override.
    #[arg(long)]
    radius: Option<f64>,
    /// Truncation half-length for non-compact exemplars.
    #[arg(long, default_value_t = 8.0)]
    halflength: f64,
}

impl MeshSource {
    fn resolve(&self) -> Result<(EmbeddedSurfaceMesh, String, Option<ShrinkerKind>), LabError> {
        if let Some(path) = &self.mesh {
            let mesh = read_off(path)?;
            return Ok((mesh, path.display().to_string(), None));
        }
        let spec = if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            let mut spec = cfg::parse_catalog_config(&text)?;
            if let Some(r) = self.radius {
                spec.radius = Some(r);
            }
            spec
        } else if let Some(kind) = &self.catalog {
            let mut spec = cfg::CatalogSpec::defaults(cfg::parse_kind(kind)?);
            spec.resolution = self.level;
            spec.halflength = self.halflength;
            spec.radius = self.radius;
            spec
        } else {
            return Err(LabError::Parameter(
                "provide --catalog, --mesh or --config".into(),
            ));
        };
        let shrinker = spec.build()?;
        let mesh = shrinker.sample_mesh(spec.resolution, spec.halflength)?;
        let label = format!(
            "{}(r={}, level={}, halflength={})",
            spec.kind,
            spec.effective_radius(),
            spec.resolution,
            spec.halflength
        );
        Ok((mesh, label, Some(spec.kind)))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a catalog exemplar, export it, and verify its closed forms.
    Catalog(MeshSource),
    /// Validate a mesh and write diagnostics.
    Validate {
        /// Mesh file (ASCII OFF).
        mesh: PathBuf,
    },
    /// Pointwise and integral weighted identities.
    VerifyIdentities(MeshSource),
    /// Constrained spectrum of the drift operator plus the interval check.
    Spectrum {
        #[command(flatten)]
        source: MeshSource,
        /// Number of eigenpairs.
        #[arg(long, default_value_t = 3)]
        pairs: usize,
        /// Also run the conformal comparison (closed meshes).
        #[arg(long)]
        conformal: bool,
        /// Dump eigenfunctions as per-vertex scalar files next to the mesh.
        #[arg(long)]
        dump_eigenfunctions: bool,
    },
    /// Clipped-area growth profile and the iteration-lemma certificate.
    Growth {
        #[command(flatten)]
        source: MeshSource,
        /// Radius grid a:b:step.
        #[arg(long, default_value = "2:8:0.5")]
        radii: String,
    },
    /// Scan t -> F_t and check the monotonicity statements.
    FtScan {
        #[command(flatten)]
        source: MeshSource,
        /// t grid a:b:step.
        #[arg(long, name = "t-grid", default_value = "0.1:5:0.01")]
        t_grid: String,
        /// Optional clip radius.
        #[arg(long)]
        clip: Option<f64>,
    },
    /// Genus-based area/entropy/curvature budgets.
    Budgets {
        #[command(flatten)]
        source: MeshSource,
        /// Radius grid for the clipped-area bound.
        #[arg(long, default_value = "1:6:1")]
        radii: String,
    },
    /// Weighted integration-by-parts identity on a ball or shell.
    Reilly {
        /// Field: x1|x2|x3|xixj|poly:coeffs.
        #[arg(long, default_value = "x1")]
        field: String,
        /// Domain: ball:R or shell:R1:R2.
        #[arg(long, default_value = "ball:1")]
        domain: String,
        /// Quadrature level.
        #[arg(long, default_value_t = 6)]
        level: u32,
    },
    /// Barrier inequality on the tangency lens.
    Barrier {
        /// Barrier sphere radius (defaults to the sqrt(6) threshold).
        #[arg(long)]
        radius: Option<f64>,
        /// Barrier amplitude.
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Grid subdivisions per axis.
        #[arg(long, default_value_t = 44)]
        grid: usize,
    },
    /// Relax a mesh toward a discrete shrinker.
    Solve {
        #[command(flatten)]
        source: MeshSource,
        /// Iteration cap.
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
        /// Energy threshold override (default: catalog floor policy).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run the full verification matrix on the catalog.
    All,
}

/// Wrapper written around every report.
#[derive(Serialize)]
struct Envelope<T: Serialize> {
    command: String,
    timestamp: String,
    seed: String,
    passed: bool,
    failures: Vec<String>,
    report: T,
}

fn timestamp() -> String {
    // Wall-clock seconds; excluded from determinism comparisons.
    match std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH) {
        Ok(d) => format!("{}", d.as_secs()),
        Err(_) => "0".to_string(),
    }
}

fn write_report<T: Serialize>(
    out_dir: &Path,
    name: &str,
    command: &str,
    seed: u64,
    report: &T,
    failures: &[String],
) -> Result<bool, LabError> {
    std::fs::create_dir_all(out_dir)?;
    let env = Envelope {
        command: command.to_string(),
        timestamp: timestamp(),
        seed: format!("0x{seed:X}"),
        passed: failures.is_empty(),
        failures: failures.to_vec(),
        report,
    };
    let path = out_dir.join(format!("{name}.json"));
    let mut text = serde_json::to_string_pretty(&env)
        .map_err(|e| LabError::Evaluation(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(failures.is_empty())
}

fn write_csv(out_dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<(), LabError> {
    std::fs::create_dir_all(out_dir)?;
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(out_dir.join(name), text)?;
    Ok(())
}

struct Ctx {
    out: PathBuf,
    seed: u64,
    tol: Option<f64>,
}

fn main() {
    let cli = Cli::parse();
    let seed = match cli.seed.as_deref().map(cfg::parse_seed).transpose() {
        Ok(s) => s.unwrap_or(shrinkerlab::DEFAULT_SEED),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    if let Some(t) = cli.tol {
        if !(t > 0.0) || !t.is_finite() {
            eprintln!("error: --tol must be positive and finite, got {t}");
            std::process::exit(2);
        }
    }
    let ctx = Ctx {
        out: cli.out.clone(),
        seed,
        tol: cli.tol,
    };
    match run(cli.command, &ctx) {
        Ok(true) => std::process::exit(0),
        Ok(false) => {
            eprintln!("one or more checks failed; see reports in {}", ctx.out.display());
            std::process::exit(1);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

fn run(command: Command, ctx: &Ctx) -> Result<bool, LabError> {
    match command {
        Command::Catalog(source) => cmd_catalog(&source, ctx),
        Command::Validate { mesh } => cmd_validate(&mesh, ctx),
        Command::VerifyIdentities(source) => cmd_identities(&source, ctx, "identities"),
        Command::Spectrum {
            source,
            pairs,
            conformal,
            dump_eigenfunctions,
        } => cmd_spectrum(&source, pairs, conformal, dump_eigenfunctions, ctx, "spectrum"),
        Command::Growth { source, radii } => cmd_growth(&source, &radii, ctx, "growth"),
        Command::FtScan {
            source,
            t_grid,
            clip,
        } => cmd_ft_scan(&source, &t_grid, clip, ctx, "ft_scan"),
        Command::Budgets { source, radii } => cmd_budgets(&source, &radii, ctx, "budgets"),
        Command::Reilly {
            field,
            domain,
            level,
        } => cmd_reilly(&field, &domain, level, ctx, "reilly"),
        Command::Barrier {
            radius,
            amplitude,
            grid,
        } => cmd_barrier(radius, amplitude, grid, ctx, "barrier"),
        Command::Solve {
            source,
            max_iterations,
            threshold,
        } => cmd_solve(&source, max_iterations, threshold, ctx, "solve"),
        Command::All => cmd_all(ctx),
    }
}

#[derive(Serialize)]
struct CatalogReport {
    label: String,
    exact: bool,
    vertex_count: usize,
    triangle_count: usize,
    euler_characteristic: i64,
    is_closed: bool,
    total_area: f64,
    discrete_residual_sup: f64,
    discrete_residual_weighted_l2: f64,
    frame_residual_sup: f64,
    off_path: String,
}

fn cmd_catalog(source: &MeshSource, ctx: &Ctx) -> Result<bool, LabError> {
    let (mesh, label, kind) = source.resolve()?;
    let diag = mesh.diagnostics();
    let res = mesh.discrete_shrinker_residual();

    // Closed-form frame residual over a parameter grid, when analytic.
    let mut frame_sup: f64 = 0.0;
    if let Some(kind) = kind {
        let shrinker = if let Some(r) = source.radius {
            shrinkerlab::catalog::make_shrinker(
                kind,
                shrinkerlab::catalog::ShrinkerParams {
                    radius: r,
                    offset: [0.0; 3],
                },
            )?
        } else {
            AnalyticShrinker::exact(kind)
        };
        if shrinker.exact {
            for i in 0..25 {
                for j in 0..25 {
                    let (a, b) = match kind {
                        ShrinkerKind::Sphere => (
                            std::f64::consts::PI * (i as f64 + 0.5) / 25.0,
                            2.0 * std::f64::consts::PI * j as f64 / 25.0,
                        ),
                        ShrinkerKind::Cylinder => (
                            2.0 * std::f64::consts::PI * j as f64 / 25.0,
                            -4.0 + 8.0 * i as f64 / 24.0,
                        ),
                        ShrinkerKind::Plane => {
                            (-2.0 + 4.0 * i as f64 / 24.0, -2.0 + 4.0 * j as f64 / 24.0)
                        }
                    };
                    frame_sup = frame_sup.max(shrinker.shrinker_residual(a, b)?.norm());
                }
            }
        }
    }

    let off_path = ctx.out.join("catalog_mesh.off");
    std::fs::create_dir_all(&ctx.out)?;
    write_off(&mesh, &off_path)?;

    let mut failures = Vec::new();
    if frame_sup > 1e-12 {
        failures.push(format!("closed-form residual sup {frame_sup} above 1e-12"));
    }
    let report = CatalogReport {
        label,
        exact: frame_sup <= 1e-12,
        vertex_count: diag.vertex_count,
        triangle_count: diag.triangle_count,
        euler_characteristic: diag.euler_characteristic,
        is_closed: diag.is_closed,
        total_area: diag.total_area,
        discrete_residual_sup: res.sup_norm,
        discrete_residual_weighted_l2: res.weighted_l2,
        frame_residual_sup: frame_sup,
        off_path: off_path.display().to_string(),
    };
    write_report(&ctx.out, "catalog", "catalog", ctx.seed, &report, &failures)
}

fn cmd_validate(path: &Path, ctx: &Ctx) -> Result<bool, LabError> {
    let mesh = read_off(path)?;
    let diag = mesh.diagnostics();
    let mut failures = Vec::new();
    let chi = 2.0 * std::f64::consts::PI * diag.euler_characteristic as f64;
    if diag.is_closed && (diag.angle_defect_total - chi).abs() > 1e-9 {
        failures.push(format!(
            "angle-defect total {} differs from 2 pi chi = {chi}",
            diag.angle_defect_total
        ));
    }
    write_report(&ctx.out, "validate", "validate", ctx.seed, &diag, &failures)
}

fn cmd_identities(source: &MeshSource, ctx: &Ctx, name: &str) -> Result<bool, LabError> {
    let (mesh, label, _) = source.resolve()?;
    let ops = assemble(&mesh)?;
    let report = identity_residuals(&mesh, &ops)?;
    let tol_mean = ctx.tol.unwrap_or(0.01);
    // Pointwise identities are judged against the natural magnitude of
    // their right-hand side: exactly zero on the sphere (pure
    // discretization error there), of order several where the weight
    // explores a range of |X|.
    let scale = report.identity_scale.max(1.0);
    let mut failures = Vec::new();
    if report.res_mean > tol_mean {
        failures.push(format!(
            "weighted mean identity residual {} above {tol_mean}",
            report.res_mean
        ));
    }
    if report.res_lx_l2 > 0.05 {
        failures.push(format!("coordinate identity L2 residual {}", report.res_lx_l2));
    }
    if report.res_lx2_l2 > 0.05 * scale {
        failures.push(format!(
            "|X|^2 drift identity L2 residual {} above {}",
            report.res_lx2_l2,
            0.05 * scale
        ));
    }
    if report.res_dx2_l2 > 0.1 * scale {
        failures.push(format!(
            "|X|^2 Laplace identity L2 residual {} above {}",
            report.res_dx2_l2,
            0.1 * scale
        ));
    }
    #[derive(Serialize)]
    struct Labeled<T: Serialize> {
        mesh: String,
        #[serde(flatten)]
        inner: T,
    }
    write_report(
        &ctx.out,
        name,
        "verify-identities",
        ctx.seed,
        &Labeled {
            mesh: label,
            inner: report,
        },
        &failures,
    )
}

#[derive(Serialize)]
struct SpectrumReport {
    mesh: String,
    lambda: Vec<f64>,
    residuals: Vec<f64>,
    multiplicity_groups: Vec<Vec<usize>>,
    constraint_violation: f64,
    coordinate_residuals: [f64; 3],
    paper_interval_check: String,
    lambda1: f64,
    interval: [f64; 2],
    shrinker_sup_residual: f64,
    check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    conformal: Option<shrinkerlab::spectrum::ConformalReport>,
}

fn cmd_spectrum(
    source: &MeshSource,
    pairs: usize,
    conformal: bool,
    dump_eigenfunctions: bool,
    ctx: &Ctx,
    name: &str,
) -> Result<bool, LabError> {
    let (mesh, label, _) = source.resolve()?;
    let ops = assemble(&mesh)?;
    let opts = EigenOptions {
        seed: ctx.seed,
        ..Default::default()
    };
    let result = first_eigenpairs(&ops, pairs, &opts)?;
    let tol = ctx.tol.unwrap_or(0.05);
    let bound = eigenvalue_bound_report(&result, &mesh, tol);
    let coord = coordinate_eigen_residual(&ops, &mesh);

    let conformal_report = if conformal {
        Some(conformal_eigen(&mesh, &opts, tol)?)
    } else {
        None
    };

    let mut failures = Vec::new();
    for (i, r) in result.residual_norms.iter().enumerate() {
        if *r > 1e-8 {
            failures.push(format!("eigenpair {i} residual {r} above 1e-8"));
        }
    }
    if result.constraint_violation > 1e-8 {
        failures.push(format!(
            "weighted-mean constraint violated: {}",
            result.constraint_violation
        ));
    }
    if bound.paper_interval_check == "outside" {
        failures.push(format!(
            "lambda1 = {} outside (1/4, 1/2] beyond tolerance",
            bound.lambda1
        ));
    }
    if let Some(c) = &conformal_report {
        if !c.comparison_ok {
            failures.push("conformal eigenvalue fell below the drift eigenvalue".into());
        }
        if !c.bound_ok {
            failures.push("conformal eigenvalue exceeds the genus bound".into());
        }
    }

    if dump_eigenfunctions {
        std::fs::create_dir_all(&ctx.out)?;
        write_off(&mesh, ctx.out.join(format!("{name}_mesh.off")))?;
        for (k, u) in result.eigenfunctions.iter().enumerate() {
            let mut text = String::new();
            for v in u {
                text.push_str(&format!("{v:.16e}\n"));
            }
            std::fs::write(ctx.out.join(format!("{name}_eigenfunction_{k}.txt")), text)?;
        }
    }

    let report = SpectrumReport {
        mesh: label,
        lambda: result.lambdas.clone(),
        residuals: result.residual_norms.clone(),
        multiplicity_groups: result.multiplicity_groups.clone(),
        constraint_violation: result.constraint_violation,
        coordinate_residuals: coord,
        paper_interval_check: bound.paper_interval_check.clone(),
        lambda1: bound.lambda1,
        interval: [bound.interval_low, bound.interval_high],
        shrinker_sup_residual: bound.shrinker_sup_residual,
        check: bound.check.clone(),
        conformal: conformal_report,
    };
    write_report(&ctx.out, name, "spectrum", ctx.seed, &report, &failures)
}

#[derive(Serialize)]
struct GrowthReport {
    mesh: String,
    profile: shrinkerlab::weighted::GrowthProfile,
    lemma: shrinkerlab::weighted::GrowthLemmaCertificate,
    closed_form_max_error: Option<f64>,
    check: String,
}

fn cmd_growth(source: &MeshSource, radii: &str, ctx: &Ctx, name: &str) -> Result<bool, LabError> {
    let (mesh, label, kind) = source.resolve()?;
    let grid = cfg::parse_range(radii)?;
    let profile = growth_profile(&mesh, &grid)?;

    // Certificate on the sampled profile with the doubling constant taken
    // from the profile itself.
    let mut c1: f64 = 1.0;
    for (i, &r) in profile.radii.iter().enumerate() {
        if let Some(j) = profile
            .radii
            .iter()
            .position(|&s| (s - r / 2.0).abs() <= 1e-9 * r.max(1.0))
        {
            if profile.areas[j] > 0.0 {
                c1 = c1.max(profile.areas[i] / (r.powi(2) * profile.areas[j]));
            }
        }
    }
    let lemma = growth_lemma_check(&profile.radii, &profile.areas, 2.0, c1 * 1.01, 2.0)?;

    let mut failures = Vec::new();
    let tol = ctx.tol.unwrap_or(0.01);
    let mut closed_form_max_error = None;
    if kind == Some(ShrinkerKind::Cylinder) {
        let r0 = source.radius.unwrap_or(shrinkerlab::catalog::EXACT_CYLINDER_RADIUS);
        let mut worst: f64 = 0.0;
        for (r, a) in profile.radii.iter().zip(&profile.areas) {
            if *r <= r0 || (r * r - r0 * r0).sqrt() > source.halflength {
                continue;
            }
            let exact = 2.0 * std::f64::consts::PI * r0 * 2.0 * (r * r - r0 * r0).sqrt();
            worst = worst.max((a - exact).abs() / exact);
            let euclid = 4.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI / r;
            if a / (r * r) > euclid * 1.05 {
                failures.push(format!("growth ratio at r = {r} exceeds the n = 2 bound"));
            }
        }
        closed_form_max_error = Some(worst);
        if worst > tol {
            failures.push(format!(
                "cylinder clipped areas deviate from the closed form by {worst}"
            ));
        }
    }
    if profile
        .areas
        .windows(2)
        .any(|w| w[1] < w[0] * (1.0 - 1e-12))
    {
        failures.push("clipped areas are not monotone".into());
    }

    let rows: Vec<String> = profile
        .radii
        .iter()
        .zip(&profile.areas)
        .map(|(r, a)| {
            let bound = 32.0 * (0.25f64).exp() * std::f64::consts::PI * r * r;
            format!("{r},{a},{bound}")
        })
        .collect();
    write_csv(&ctx.out, &format!("{name}_profile.csv"), "r,area,bound", &rows)?;

    let report = GrowthReport {
        mesh: label,
        profile,
        lemma,
        closed_form_max_error,
        check: "clipped areas grow at most like r^2 with the catalog closed forms".to_string(),
    };
    write_report(&ctx.out, name, "growth", ctx.seed, &report, &failures)
}

#[derive(Serialize)]
struct FtReport {
    mesh: String,
    scan: shrinkerlab::weighted::FtScanReport,
    truncation_tail: f64,
    closed_form_max_error: Option<f64>,
}

fn cmd_ft_scan(
    source: &MeshSource,
    t_grid: &str,
    clip: Option<f64>,
    ctx: &Ctx,
    name: &str,
) -> Result<bool, LabError> {
    let (mesh, label, kind) = source.resolve()?;
    let grid = cfg::parse_range(t_grid)?;
    let tol = ctx.tol.unwrap_or(0.005);
    let scan = ft_monotonicity_scan(&mesh, clip, &grid, tol)?;
    let tail = truncation_tail_bound(&mesh, 1.0);

    let mut failures = Vec::new();
    if !scan.monotone_after_one {
        failures.push(format!(
            "dF/dt reaches {} past t = 1",
            scan.max_derivative_t_ge_1
        ));
    }
    if !scan.dominated_by_f1 {
        failures.push("some F_t exceeds F_1 beyond tolerance".into());
    }
    let mut closed_form_max_error = None;
    if kind == Some(ShrinkerKind::Sphere) && source.radius.unwrap_or(2.0) == 2.0 {
        let mut worst: f64 = 0.0;
        for s in &scan.samples {
            let exact = (4.0 / s.t) * (-1.0 / s.t).exp();
            worst = worst.max((s.value - exact).abs() / exact);
        }
        closed_form_max_error = Some(worst);
        if worst > tol {
            failures.push(format!("F_t deviates from (4/t)exp(-1/t) by {worst}"));
        }
        if (scan.argmax_t - 1.0).abs() > 0.02 {
            failures.push(format!("F_t maximized at {} instead of 1", scan.argmax_t));
        }
    }

    let rows: Vec<String> = scan
        .samples
        .iter()
        .map(|s| format!("{},{},{}", s.t, s.value, s.derivative))
        .collect();
    write_csv(&ctx.out, &format!("{name}.csv"), "t,F_t,dF_dt", &rows)?;

    let report = FtReport {
        mesh: label,
        scan,
        truncation_tail: tail,
        closed_form_max_error,
    };
    write_report(&ctx.out, name, "ft-scan", ctx.seed, &report, &failures)
}

fn cmd_budgets(source: &MeshSource, radii: &str, ctx: &Ctx, name: &str) -> Result<bool, LabError> {
    let (mesh, label, _) = source.resolve()?;
    let grid = cfg::parse_range(radii)?;
    let report = genus_budgets(&mesh, &grid)?;
    let mut failures = Vec::new();
    for line in &report.lines {
        if !line.satisfied {
            failures.push(format!(
                "{}: value {} violates bound {}",
                line.name, line.value, line.bound
            ));
        }
    }
    let tol = ctx.tol.unwrap_or(0.02);
    if report.curvature_identity_mismatch > tol {
        failures.push(format!(
            "total curvature vs area - 4 pi chi mismatch {}",
            report.curvature_identity_mismatch
        ));
    }
    #[derive(Serialize)]
    struct Labeled<T: Serialize> {
        mesh: String,
        #[serde(flatten)]
        inner: T,
    }
    write_report(
        &ctx.out,
        name,
        "budgets",
        ctx.seed,
        &Labeled {
            mesh: label,
            inner: report,
        },
        &failures,
    )
}

fn cmd_reilly(field: &str, domain: &str, level: u32, ctx: &Ctx, name: &str) -> Result<bool, LabError> {
    let field = cfg::parse_field(field)?;
    let domain = cfg::parse_domain(domain)?;
    let report = reilly_residual(domain, &field, level)?;
    let tol = ctx.tol.unwrap_or(1e-5);
    let mut failures = Vec::new();
    if report.residual.abs() > tol {
        failures.push(format!("residual {} above {tol}", report.residual));
    }
    write_report(&ctx.out, name, "reilly", ctx.seed, &report, &failures)
}

fn cmd_barrier(
    radius: Option<f64>,
    amplitude: f64,
    grid: usize,
    ctx: &Ctx,
    name: &str,
) -> Result<bool, LabError> {
    let r = radius.unwrap_or_else(|| 6.0f64.sqrt());
    let spec = BarrierSpec::tangent(r, shrinkerlab::mesh::Vec3::new(0.0, 0.0, 1.0), amplitude)?;
    let report = barrier_verify(&spec, 0.0, grid)?;
    let mut failures = Vec::new();
    if !report.ok {
        failures.push(format!("max drift {} exceeds the slack", report.max_drift));
    }
    write_report(&ctx.out, name, "barrier", ctx.seed, &report, &failures)
}

#[derive(Serialize)]
struct SolveReport {
    mesh: String,
    converged: bool,
    iterations: usize,
    initial_energy: f64,
    final_energy: f64,
    energy_threshold: f64,
    final_sup_residual: f64,
    final_mean_radius: f64,
    monotone: bool,
    off_path: String,
}

fn cmd_solve(
    source: &MeshSource,
    max_iterations: usize,
    threshold: Option<f64>,
    ctx: &Ctx,
    name: &str,
) -> Result<bool, LabError> {
    let (mesh, label, kind) = source.resolve()?;
    let mut opts = RelaxOptions {
        max_iterations,
        ..Default::default()
    };
    opts = match (threshold, kind) {
        (Some(t), _) => RelaxOptions {
            energy_threshold: t,
            ..opts
        },
        (None, Some(kind)) => {
            // Floor policy: the exact exemplar at the same resolution.
            let exact = AnalyticShrinker::exact(kind);
            let reference = exact.sample_mesh(source.level, source.halflength)?;
            opts.with_catalog_floor(&reference)
        }
        (None, None) => opts,
    };
    let initial_energy = residual_energy(&mesh);
    let (relaxed, trace) = relax(&mesh, &opts).map_err(|abort| abort.error)?;

    let rows: Vec<String> = trace
        .energies
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let step = if i == 0 { 0.0 } else { trace.steps[i - 1] };
            format!("{i},{e},{step}")
        })
        .collect();
    write_csv(&ctx.out, &format!("{name}_trace.csv"), "iter,energy,step", &rows)?;
    let off_path = ctx.out.join(format!("{name}_relaxed.off"));
    write_off(&relaxed, &off_path)?;

    let monotone = trace.energies.windows(2).all(|w| w[1] < w[0]);
    let mut failures = Vec::new();
    if !trace.converged {
        failures.push(format!(
            "did not converge below {} in {} iterations",
            opts.energy_threshold, trace.iterations
        ));
    }
    if !monotone && trace.energies.len() > 1 {
        failures.push("energy trace is not strictly decreasing".into());
    }
    let report = SolveReport {
        mesh: label,
        converged: trace.converged,
        iterations: trace.iterations,
        initial_energy,
        final_energy: *trace.energies.last().unwrap(),
        energy_threshold: opts.energy_threshold,
        final_sup_residual: trace.final_sup_residual,
        final_mean_radius: mean_radius(&relaxed),
        monotone,
        off_path: off_path.display().to_string(),
    };
    write_report(&ctx.out, name, "solve", ctx.seed, &report, &failures)
}

/// The standard matrix: every check on its canonical catalog target.
fn cmd_all(ctx: &Ctx) -> Result<bool, LabError> {
    let sphere = MeshSource {
        catalog: Some("sphere".into()),
        mesh: None,
        config: None,
        level: 4,
        radius: None,
        halflength: 8.0,
    };
    let cylinder = MeshSource {
        catalog: Some("cylinder".into()),
        mesh: None,
        config: None,
        level: 48,
        radius: None,
        halflength: 8.0,
    };
    let growth_cylinder = MeshSource {
        halflength: 52.0,
        level: 64,
        ..cylinder.clone()
    };
    let start_sphere = MeshSource {
        radius: Some(1.8),
        level: 3,
        ..sphere.clone()
    };

    type Check = Box<dyn FnOnce(&Ctx) -> Result<bool, LabError> + Send>;
    let checks: Vec<(&'static str, Check)> = vec![
        ("catalog", {
            let s = sphere.clone();
            Box::new(move |c: &Ctx| cmd_catalog(&s, c))
        }),
        ("identities_sphere", {
            let s = sphere.clone();
            Box::new(move |c: &Ctx| cmd_identities(&s, c, "identities_sphere"))
        }),
        ("identities_cylinder", {
            let s = cylinder.clone();
            Box::new(move |c: &Ctx| cmd_identities(&s, c, "identities_cylinder"))
        }),
        ("spectrum_sphere", {
            let s = sphere.clone();
            Box::new(move |c: &Ctx| cmd_spectrum(&s, 3, true, false, c, "spectrum_sphere"))
        }),
        ("spectrum_cylinder", {
            let s = cylinder.clone();
            Box::new(move |c: &Ctx| cmd_spectrum(&s, 1, false, false, c, "spectrum_cylinder"))
        }),
        ("growth_cylinder", {
            let s = growth_cylinder;
            Box::new(move |c: &Ctx| cmd_growth(&s, "2:50:0.5", c, "growth_cylinder"))
        }),
        ("ft_scan_sphere", {
            let s = sphere.clone();
            Box::new(move |c: &Ctx| cmd_ft_scan(&s, "0.1:5:0.01", None, c, "ft_scan_sphere"))
        }),
        ("budgets_sphere", {
            let s = sphere.clone();
            Box::new(move |c: &Ctx| cmd_budgets(&s, "1:6:1", c, "budgets_sphere"))
        }),
        ("reilly_x1_ball1", Box::new(|c: &Ctx| cmd_reilly("x1", "ball:1", 6, c, "reilly_x1_ball1"))),
        (
            "reilly_x1x2_ball2",
            Box::new(|c: &Ctx| cmd_reilly("x1x2", "ball:2", 6, c, "reilly_x1x2_ball2")),
        ),
        ("barrier", Box::new(|c: &Ctx| cmd_barrier(None, 1.0, 44, c, "barrier"))),
        ("poincare_log_sobolev", Box::new(|c: &Ctx| cmd_function_suites(c))),
        ("solve_sphere", {
            let s = start_sphere;
            Box::new(move |c: &Ctx| cmd_solve(&s, 500, None, c, "solve_sphere"))
        }),
    ];

    let threads: usize = std::env::var("SHRINKERLAB_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get().min(4))
                .unwrap_or(1)
        })
        .max(1);

    let mut all_ok = true;
    let mut queue: Vec<(&'static str, Check)> = checks;
    while !queue.is_empty() {
        let batch: Vec<(&'static str, Check)> =
            queue.drain(..queue.len().min(threads)).collect();
        let results: Vec<(&'static str, Result<bool, LabError>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = batch
                .into_iter()
                .map(|(name, f)| scope.spawn(move || (name, f(ctx))))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for (name, outcome) in results {
            match outcome {
                Ok(true) => println!("PASS {name}"),
                Ok(false) => {
                    println!("FAIL {name}");
                    all_ok = false;
                }
                Err(e) => return Err(LabError::Evaluation(format!("{name}: {e}"))),
            }
        }
    }
    Ok(all_ok)
}

#[derive(Serialize)]
struct FunctionSuiteReport {
    functions: usize,
    poincare_violations: usize,
    poincare_min_slack: f64,
    log_sobolev: shrinkerlab::weighted::LogSobolevReport,
}

/// Poincare and log-Sobolev property suites on the sphere mesh.
fn cmd_function_suites(ctx: &Ctx) -> Result<bool, LabError> {
    let mesh = AnalyticShrinker::exact(ShrinkerKind::Sphere).sample_mesh(4, 8.0)?;
    let ops = assemble(&mesh)?;
    let functions = random_polynomial_functions(&mesh, 100, ctx.seed);
    let slacks = shrinkerlab::spectrum::poincare_check(&ops, &functions);
    let tol = ctx.tol.unwrap_or(0.05);
    let mut violations = 0usize;
    let mut min_slack = f64::INFINITY;
    for (f, s) in functions.iter().zip(&slacks) {
        let grad = 4.0 * ops.stiffness.quadratic_form(&ops.mean_zero(f));
        if *s < -tol * grad {
            violations += 1;
        }
        min_slack = min_slack.min(*s);
    }
    let ls = log_sobolev_check(&mesh, &ops, &functions, tol);
    let mut failures = Vec::new();
    if violations > 0 {
        failures.push(format!("{violations} Poincare violations"));
    }
    if ls.violations > 0 {
        failures.push(format!("{} log-Sobolev violations", ls.violations));
    }
    let report = FunctionSuiteReport {
        functions: functions.len(),
        poincare_violations: violations,
        poincare_min_slack: min_slack,
        log_sobolev: ls,
    };
    write_report(
        &ctx.out,
        "poincare_log_sobolev",
        "function-suites",
        ctx.seed,
        &report,
        &failures,
    )
}

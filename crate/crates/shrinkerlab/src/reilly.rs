//! Term-by-term verification of the weighted integration-by-parts identity
//! for the ambient drift operator `Lbar f = Laplace f - (1/2)<X, grad f>`
//! on balls and spherical shells, plus the exponential barrier inequality
//! that powers the boundary gradient estimate.
//!
//! For a function f on a domain Omega with g = Lbar f and u = f|_{dOmega}:
//!
//! ```text
//! int_O g^2 rho = int_O |Hess f|^2 rho + 1/2 int_O |grad f|^2 rho
//!               + 2 int_dO f_nu (L u) rho - int_dO h(grad u, grad u) rho
//!               - int_dO f_nu^2 (<X,nu>/2 + H) rho
//! ```
//!
//! with `h(v, w) = <D_v w, nu>` for the outward unit normal, so on the
//! boundary of a ball of radius R the sphere bends away from nu and
//! `h = -|v|^2/R`, `H = -2/R`. The last term vanishes identically when the
//! boundary is a self-shrinker.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::Vec3;

/// Ambient scalar field with gradient and Hessian evaluators. Closed-form
/// derivatives when available; otherwise fourth-order central differences
/// with step `1e-4 * (1 + |X|)`.
pub struct AmbientField {
    f: Box<dyn Fn(&Vec3) -> f64 + Sync>,
    grad: Option<Box<dyn Fn(&Vec3) -> Vec3 + Sync>>,
    hess: Option<Box<dyn Fn(&Vec3) -> Matrix3<f64> + Sync>>,
    pub name: String,
}

impl AmbientField {
    pub fn from_closures(
        name: impl Into<String>,
        f: impl Fn(&Vec3) -> f64 + Sync + 'static,
        grad: impl Fn(&Vec3) -> Vec3 + Sync + 'static,
        hess: impl Fn(&Vec3) -> Matrix3<f64> + Sync + 'static,
    ) -> Self {
        Self {
            f: Box::new(f),
            grad: Some(Box::new(grad)),
            hess: Some(Box::new(hess)),
            name: name.into(),
        }
    }

    /// Derivatives by finite differences only.
    pub fn from_fn(name: impl Into<String>, f: impl Fn(&Vec3) -> f64 + Sync + 'static) -> Self {
        Self {
            f: Box::new(f),
            grad: None,
            hess: None,
            name: name.into(),
        }
    }

    /// Trivariate polynomial of degree <= 3 with exact derivatives.
    /// Coefficient order: 1, x, y, z, x^2, xy, xz, y^2, yz, z^2,
    /// x^3, x^2 y, x^2 z, x y^2, x y z, x z^2, y^3, y^2 z, y z^2, z^3.
    pub fn polynomial(name: impl Into<String>, coeffs: [f64; 20]) -> Self {
        let c = coeffs;
        let f = move |p: &Vec3| -> f64 {
            let (x, y, z) = (p.x, p.y, p.z);
            c[0] + c[1] * x
                + c[2] * y
                + c[3] * z
                + c[4] * x * x
                + c[5] * x * y
                + c[6] * x * z
                + c[7] * y * y
                + c[8] * y * z
                + c[9] * z * z
                + c[10] * x * x * x
                + c[11] * x * x * y
                + c[12] * x * x * z
                + c[13] * x * y * y
                + c[14] * x * y * z
                + c[15] * x * z * z
                + c[16] * y * y * y
                + c[17] * y * y * z
                + c[18] * y * z * z
                + c[19] * z * z * z
        };
        let grad = move |p: &Vec3| -> Vec3 {
            let (x, y, z) = (p.x, p.y, p.z);
            Vec3::new(
                c[1] + 2.0 * c[4] * x
                    + c[5] * y
                    + c[6] * z
                    + 3.0 * c[10] * x * x
                    + 2.0 * c[11] * x * y
                    + 2.0 * c[12] * x * z
                    + c[13] * y * y
                    + c[14] * y * z
                    + c[15] * z * z,
                c[2] + c[5] * x
                    + 2.0 * c[7] * y
                    + c[8] * z
                    + c[11] * x * x
                    + 2.0 * c[13] * x * y
                    + c[14] * x * z
                    + 3.0 * c[16] * y * y
                    + 2.0 * c[17] * y * z
                    + c[18] * z * z,
                c[3] + c[6] * x
                    + c[8] * y
                    + 2.0 * c[9] * z
                    + c[12] * x * x
                    + c[14] * x * y
                    + 2.0 * c[15] * x * z
                    + c[17] * y * y
                    + 2.0 * c[18] * y * z
                    + 3.0 * c[19] * z * z,
            )
        };
        let hess = move |p: &Vec3| -> Matrix3<f64> {
            let (x, y, z) = (p.x, p.y, p.z);
            let dxx = 2.0 * c[4] + 6.0 * c[10] * x + 2.0 * c[11] * y + 2.0 * c[12] * z;
            let dyy = 2.0 * c[7] + 2.0 * c[13] * x + 6.0 * c[16] * y + 2.0 * c[17] * z;
            let dzz = 2.0 * c[9] + 2.0 * c[15] * x + 2.0 * c[18] * y + 6.0 * c[19] * z;
            let dxy = c[5] + 2.0 * c[11] * x + 2.0 * c[13] * y + c[14] * z;
            let dxz = c[6] + 2.0 * c[12] * x + c[14] * y + 2.0 * c[15] * z;
            let dyz = c[8] + c[14] * x + 2.0 * c[17] * y + 2.0 * c[18] * z;
            Matrix3::new(dxx, dxy, dxz, dxy, dyy, dyz, dxz, dyz, dzz)
        };
        Self::from_closures(name, f, grad, hess)
    }

    /// The coordinate field x_i.
    pub fn coordinate(axis: usize) -> Self {
        let mut coeffs = [0.0; 20];
        coeffs[1 + axis] = 1.0;
        Self::polynomial(format!("x{}", axis + 1), coeffs)
    }

    /// The product field x_i * x_j.
    pub fn coordinate_product(i: usize, j: usize) -> Self {
        let mut coeffs = [0.0; 20];
        let slot = match (i.min(j), i.max(j)) {
            (0, 0) => 4,
            (0, 1) => 5,
            (0, 2) => 6,
            (1, 1) => 7,
            (1, 2) => 8,
            (2, 2) => 9,
            _ => 4,
        };
        coeffs[slot] = 1.0;
        Self::polynomial(format!("x{}x{}", i.min(j) + 1, i.max(j) + 1), coeffs)
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        (self.f)(x)
    }

    fn fd_step(x: &Vec3) -> f64 {
        1e-4 * (1.0 + x.norm())
    }

    /// Fourth-order central-difference gradient.
    pub fn fd_gradient(&self, x: &Vec3) -> Vec3 {
        let h = Self::fd_step(x);
        let mut g = Vec3::zeros();
        for a in 0..3 {
            let mut e = Vec3::zeros();
            e[a] = 1.0;
            let fp2 = (self.f)(&(x + 2.0 * h * e));
            let fp1 = (self.f)(&(x + h * e));
            let fm1 = (self.f)(&(x - h * e));
            let fm2 = (self.f)(&(x - 2.0 * h * e));
            g[a] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
        }
        g
    }

    /// Fourth-order central-difference Hessian.
    pub fn fd_hessian(&self, x: &Vec3) -> Matrix3<f64> {
        let h = Self::fd_step(x);
        let mut m = Matrix3::zeros();
        let f0 = (self.f)(x);
        for a in 0..3 {
            let mut ea = Vec3::zeros();
            ea[a] = 1.0;
            let fp2 = (self.f)(&(x + 2.0 * h * ea));
            let fp1 = (self.f)(&(x + h * ea));
            let fm1 = (self.f)(&(x - h * ea));
            let fm2 = (self.f)(&(x - 2.0 * h * ea));
            m[(a, a)] = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
            for b in (a + 1)..3 {
                let mut eb = Vec3::zeros();
                eb[b] = 1.0;
                // Fourth-order cross stencil: compose the 1-D first
                // derivative stencils in both directions.
                let s = [-2.0, -1.0, 1.0, 2.0];
                let w = [1.0, -8.0, 8.0, -1.0];
                let mut acc = 0.0;
                for (ia, &sa) in s.iter().enumerate() {
                    for (ib, &sb) in s.iter().enumerate() {
                        acc += w[ia] * w[ib] * (self.f)(&(x + h * (sa * ea + sb * eb)));
                    }
                }
                let v = acc / (144.0 * h * h);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        m
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        match &self.grad {
            Some(g) => g(x),
            None => self.fd_gradient(x),
        }
    }

    pub fn hessian(&self, x: &Vec3) -> Matrix3<f64> {
        match &self.hess {
            Some(h) => h(x),
            None => self.fd_hessian(x),
        }
    }

    /// `Lbar f = trace(Hess f) - (1/2) <X, grad f>`.
    pub fn drift(&self, x: &Vec3) -> f64 {
        if !x.iter().all(|c| c.is_finite()) {
            return f64::NAN;
        }
        self.hessian(x).trace() - 0.5 * x.dot(&self.gradient(x))
    }

    /// Cross-check closed-form derivatives against finite differences at
    /// deterministic sample points. Returns the worst relative mismatch.
    pub fn derivative_crosscheck(&self, samples: usize, seed: u64) -> f64 {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = Vec3::new(
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
            );
            let g = self.gradient(&x);
            let gf = self.fd_gradient(&x);
            let scale = g.norm().max(1.0);
            worst = worst.max((g - gf).norm() / scale);
            let h = self.hessian(&x);
            let hf = self.fd_hessian(&x);
            let hscale = h.norm().max(1.0);
            worst = worst.max((h - hf).norm() / hscale);
        }
        worst
    }
}

/// Integration domains with exactly-known spherical boundary geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DomainSpec {
    Ball { radius: f64 },
    Shell { inner: f64, outer: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DomainSpec::Ball { radius } => {
                if !(radius > 0.0) || !radius.is_finite() {
                    return Err(Error::Parameter(format!("ball radius {radius} invalid")));
                }
            }
            DomainSpec::Shell { inner, outer } => {
                if !(inner > 0.0) || !(outer > inner) || !outer.is_finite() {
                    return Err(Error::Parameter(format!(
                        "shell radii ({inner}, {outer}) invalid"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// All terms of the identity plus the residual and a refinement error bar.
#[derive(Debug, Clone, Serialize)]
pub struct ReillyReport {
    pub lhs: f64,
    pub hessian: f64,
    pub gradient_half: f64,
    pub boundary_fnu_lu: f64,
    pub boundary_h: f64,
    pub boundary_shrinker: f64,
    pub residual: f64,
    pub error_bar: f64,
    pub quadrature_level: u32,
    pub field: String,
    pub domain: DomainSpec,
    pub check: String,
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

struct SphereGrid {
    /// (mu = cos(theta), weight) Gauss-Legendre pairs.
    mu: Vec<(f64, f64)>,
    n_phi: usize,
}

impl SphereGrid {
    fn new(n_theta: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n_theta);
        SphereGrid {
            mu: nodes.into_iter().zip(weights).collect(),
            n_phi: 2 * n_theta,
        }
    }

    /// Integrate a K-component integrand over the unit sphere (scale by R^2
    /// outside for a radius-R sphere).
    fn integrate<const K: usize>(&self, mut f: impl FnMut(&Vec3) -> [f64; K]) -> [f64; K] {
        let dphi = 2.0 * std::f64::consts::PI / self.n_phi as f64;
        let mut shells = vec![[0.0f64; K]; self.mu.len()];
        for (si, &(mu, w)) in self.mu.iter().enumerate() {
            let s = (1.0 - mu * mu).max(0.0).sqrt();
            let mut ring = [0.0f64; K];
            for j in 0..self.n_phi {
                let phi = dphi * j as f64;
                let dir = Vec3::new(s * phi.cos(), s * phi.sin(), mu);
                let v = f(&dir);
                for k in 0..K {
                    ring[k] += v[k];
                }
            }
            for k in 0..K {
                shells[si][k] = w * dphi * ring[k];
            }
        }
        let mut out = [0.0f64; K];
        for k in 0..K {
            let column: Vec<f64> = shells.iter().map(|s| s[k]).collect();
            out[k] = crate::quad::pairwise_sum(&column);
        }
        out
    }
}

fn rho(x: &Vec3) -> f64 {
    (-x.norm_squared() / 4.0).exp()
}

/// Evaluate all six terms at one quadrature level.
fn reilly_terms(domain: DomainSpec, field: &AmbientField, level: u32) -> Result<[f64; 6]> {
    domain.validate()?;
    let level = level.max(1);
    let n_r = level as usize + 2;
    let n_theta = (level as usize + 1).max(4);
    let grid = SphereGrid::new(n_theta);
    let (gl_nodes, gl_weights) = gauss_legendre(n_r);

    let (r_lo, r_hi, spheres) = match domain {
        DomainSpec::Ball { radius } => (0.0, radius, vec![(radius, 1.0)]),
        DomainSpec::Shell { inner, outer } => {
            (inner, outer, vec![(outer, 1.0), (inner, -1.0)])
        }
    };

    // Volume terms: radial Gauss-Legendre times the angular grid.
    let mut lhs = 0.0;
    let mut hess_term = 0.0;
    let mut grad_half = 0.0;
    for (node, w) in gl_nodes.iter().zip(&gl_weights) {
        let r = 0.5 * (r_hi + r_lo) + 0.5 * (r_hi - r_lo) * node;
        let wr = 0.5 * (r_hi - r_lo) * w * r * r;
        let [g2, h2, gr] = grid.integrate(|dir| {
            let x = r * dir;
            let g = field.drift(&x);
            let hess = field.hessian(&x);
            let grad = field.gradient(&x);
            let rho_x = rho(&x);
            [
                g * g * rho_x,
                hess.norm_squared() * rho_x,
                grad.norm_squared() * rho_x,
            ]
        });
        if !(g2.is_finite() && h2.is_finite() && gr.is_finite()) {
            return Err(Error::Evaluation(format!(
                "field {} not finite on the domain",
                field.name
            )));
        }
        lhs += wr * g2;
        hess_term += wr * h2;
        grad_half += 0.5 * wr * gr;
    }

    // Boundary terms on each sphere; sign = +1 when the outward normal of
    // the domain points away from the origin, -1 on the inner shell wall.
    let mut b_fnu_lu = 0.0;
    let mut b_h = 0.0;
    let mut b_shrink = 0.0;
    for (radius, sign) in spheres {
        let [fnu_lu, h_term, shrink] = grid.integrate(|dir| {
            let x = radius * dir;
            let nu = sign * dir;
            let grad = field.gradient(&x);
            let hess = field.hessian(&x);
            let f_nu = grad.dot(&nu);
            let grad_t = grad - f_nu * nu;
            // Surface Laplacian from ambient data on a centered sphere:
            // Lap_S u = Lap f - Hess(nu, nu) - (div_S nu) f_nu with
            // div_S nu = sign * 2 / radius. The tangential drift term
            // <X, grad_T u> vanishes on centered spheres; kept as written.
            let lap_u =
                hess.trace() - (hess * nu).dot(&nu) - (sign * 2.0 / radius) * f_nu;
            let lu = lap_u - 0.5 * x.dot(&grad_t);
            // h(v, v) = <D_v v, nu> = -sign |v|^2 / radius on the sphere,
            // H = trace h = -sign * 2 / radius.
            let factor = 0.5 * x.dot(&nu) - sign * 2.0 / radius;
            let rho_x = rho(&x);
            [
                f_nu * lu * rho_x,
                (-sign / radius) * grad_t.norm_squared() * rho_x,
                f_nu * f_nu * factor * rho_x,
            ]
        });
        let scale = radius * radius;
        b_fnu_lu += scale * fnu_lu;
        b_h += scale * h_term;
        b_shrink += scale * shrink;
    }

    Ok([lhs, hess_term, grad_half, 2.0 * b_fnu_lu, b_h, b_shrink])
}

/// Evaluate the identity at `level`, with an error bar from comparing
/// against `level - 1`.
pub fn reilly_residual(
    domain: DomainSpec,
    field: &AmbientField,
    level: u32,
) -> Result<ReillyReport> {
    let terms = reilly_terms(domain, field, level)?;
    let coarse = reilly_terms(domain, field, level.saturating_sub(1).max(1))?;

    let residual_of = |t: &[f64; 6]| t[0] - (t[1] + t[2] + t[3] - t[4] - t[5]);
    let residual = residual_of(&terms);
    let residual_coarse = residual_of(&coarse);
    let scale: f64 = terms.iter().map(|v| v.abs()).sum();
    let error_bar = (residual - residual_coarse).abs().max(1e-14 * scale.max(1.0));

    Ok(ReillyReport {
        lhs: terms[0],
        hessian: terms[1],
        gradient_half: terms[2],
        boundary_fnu_lu: terms[3],
        boundary_h: terms[4],
        boundary_shrinker: terms[5],
        residual,
        error_bar,
        quadrature_level: level,
        field: field.name.clone(),
        domain,
        check: "weighted integration-by-parts identity for the ambient drift operator".to_string(),
    })
}

/// Barrier data for the boundary gradient estimate: `w(d) = 3 u0 (1 -
/// exp(-(d^2 - R^2)/2))` with `d = |X - Y0|`, tangent sphere center `Y0`.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierSpec {
    pub center: [f64; 3],
    pub radius: f64,
    pub amplitude: f64,
}

impl BarrierSpec {
    /// Tangency configuration: the witness point sits at `R * direction`
    /// and the barrier ball of the same radius touches from outside, so the
    /// center is `2 R * direction`.
    pub fn tangent(radius: f64, direction: Vec3, amplitude: f64) -> Result<Self> {
        if !(radius > 0.0) || !(amplitude > 0.0) {
            return Err(Error::Parameter(
                "barrier radius and amplitude must be positive".into(),
            ));
        }
        let dir = direction / direction.norm();
        Ok(Self {
            center: (2.0 * radius * dir).into(),
            radius,
            amplitude,
        })
    }

    pub fn upper(&self, x: &Vec3) -> f64 {
        let d2 = (x - Vec3::from(self.center)).norm_squared();
        3.0 * self.amplitude * (1.0 - (-(d2 - self.radius * self.radius) / 2.0).exp())
    }

    /// Closed-form `Lbar w^+` in R^3 (ambient dimension n + 1 with n = 2):
    /// `3 u0 exp(-(d^2-R^2)/2) (1 - d^2 + n - <X, X - Y0>/2)`.
    pub fn drift_upper(&self, x: &Vec3) -> f64 {
        let y = x - Vec3::from(self.center);
        let d2 = y.norm_squared();
        let n = 2.0;
        3.0 * self.amplitude
            * (-(d2 - self.radius * self.radius) / 2.0).exp()
            * (1.0 - d2 + n - 0.5 * x.dot(&y))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    pub spec: BarrierSpec,
    pub grid_points: usize,
    /// Largest value of `Lbar w^+` over the grid; must be <= slack.
    pub max_drift: f64,
    /// Margin `-max_drift` (positive when the inequality holds strictly).
    pub margin: f64,
    /// Numerical slack accepted at the tangency threshold.
    pub slack: f64,
    pub ok: bool,
    pub check: String,
}

/// Threshold radius for the barrier hypothesis in R^3: sqrt(2(n+1)) = sqrt(6).
pub fn barrier_radius_threshold(surface_diameter: f64) -> f64 {
    (2.0f64 * 3.0).sqrt() + surface_diameter
}

/// Verify `Lbar w^+ <= 0` on a deterministic grid of the lens
/// `B_sqrt(R^2+1)(Y0) cap B_R(0)`.
pub fn barrier_verify(
    spec: &BarrierSpec,
    surface_diameter: f64,
    grid_per_axis: usize,
) -> Result<BarrierReport> {
    let threshold = barrier_radius_threshold(surface_diameter);
    if spec.radius < threshold - 1e-12 {
        return Err(Error::Parameter(format!(
            "barrier radius {} below the threshold {threshold}",
            spec.radius
        )));
    }
    let r = spec.radius;
    let y0 = Vec3::from(spec.center);
    let touch = 0.5 * y0; // tangency point R * direction
    let dir = y0 / y0.norm();

    // Orthonormal frame at the tangency point.
    let mut t1 = if dir.x.abs() < 0.9 {
        Vector3::x().cross(&dir)
    } else {
        Vector3::y().cross(&dir)
    };
    t1 /= t1.norm();
    let t2 = dir.cross(&t1);

    // The lens lives within depth ~ (sqrt(R^2+1) - R) of the tangency point
    // along -dir and lateral extent ~ 1. Grid a box and keep points inside.
    let depth = ((r * r + 1.0).sqrt() - r) * 1.05 + 1e-3;
    let lateral = 1.05;
    let mut max_drift = f64::NEG_INFINITY;
    let mut kept = 0usize;
    let n1 = grid_per_axis;
    for ia in 0..n1 {
        let a = -depth * (ia as f64 + 0.5) / n1 as f64;
        for ib in 0..n1 {
            let b = lateral * (2.0 * (ib as f64 + 0.5) / n1 as f64 - 1.0);
            for ic in 0..n1 {
                let c = lateral * (2.0 * (ic as f64 + 0.5) / n1 as f64 - 1.0);
                let x = touch + a * dir + b * t1 + c * t2;
                let inside_ball = x.norm() <= r;
                let d2 = (x - y0).norm_squared();
                let inside_lens = d2 <= r * r + 1.0;
                if inside_ball && inside_lens {
                    kept += 1;
                    max_drift = max_drift.max(spec.drift_upper(&x));
                }
            }
        }
    }
    let slack = 1e-12 * 3.0 * spec.amplitude;
    Ok(BarrierReport {
        spec: spec.clone(),
        grid_points: kept,
        max_drift,
        margin: -max_drift,
        slack,
        ok: max_drift <= slack,
        check: "barrier satisfies Lbar w+ <= 0 on the tangency lens".to_string(),
    })
}

//! The torsion problem `Δu = 2` in a star-shaped planar domain with `u = 0`
//! on the boundary, and the integral identities built on it.
//!
//! The domain `{c + s R(θ) e(θ) : 0 ≤ s < 1}` is meshed in the stretched
//! polar coordinates `(ρ, θ)` with `x = c + ρ R(θ) e(θ)`, so the boundary is
//! the grid line `ρ = 1`. In these coordinates, with `g = R'/R`,
//!
//! ```text
//! R² Δu = (1+g²) U_ρρ + (1+g²−g') U_ρ / ρ + U_θθ / ρ² − 2g U_ρθ / ρ.
//! ```
//!
//! The origin is a single unknown whose equation is a finite-volume balance
//! over the cell `ρ < h/2`.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::jet::{Jet2, ScalarField};
use crate::surface_geometry::RadialSurface;

const DIM: usize = 2;

/// A function of the polar angle extended to `R² \ {0}` as a degree-zero
/// homogeneous field. `f` returns `(f, f', f'')` at `θ`.
pub struct AngularField<F> {
    f: F,
}

impl<F> AngularField<F>
where
    F: Fn(f64) -> (f64, f64, f64) + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> ScalarField for AngularField<F>
where
    F: Fn(f64) -> (f64, f64, f64) + Send + Sync,
{
    fn dim(&self) -> usize {
        DIM
    }

    fn jet(&self, x: &[f64]) -> Result<Jet2> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if !(r2 > 0.0) {
            return Err(Error::Domain(
                "angular field is undefined at the origin".into(),
            ));
        }
        let r4 = r2 * r2;
        let theta = Jet2::from_parts(
            x[1].atan2(x[0]),
            &[-x[1] / r2, x[0] / r2],
            &[
                2.0 * x[0] * x[1] / r4,
                (x[1] * x[1] - x[0] * x[0]) / r4,
                (x[1] * x[1] - x[0] * x[0]) / r4,
                -2.0 * x[0] * x[1] / r4,
            ],
        );
        Ok(theta.compose((self.f)(theta.value())))
    }
}

/// The disk of radius `radius` about the origin.
pub fn disk(radius: f64) -> Result<RadialSurface> {
    RadialSurface::sphere(vec![0.0; DIM], radius)
}

/// The ellipse `x²/a² + y²/b² < 1`.
pub fn ellipse(a: f64, b: f64) -> Result<RadialSurface> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "semi-axes must be positive, got ({a}, {b})"
        )));
    }
    let base = a.min(b);
    let field = AngularField::new(move |t: f64| {
        let (s, c) = t.sin_cos();
        let d = b * b * c * c + a * a * s * s;
        let d1 = (a * a - b * b) * (2.0 * t).sin();
        let d2 = 2.0 * (a * a - b * b) * (2.0 * t).cos();
        let ab = a * b;
        let r = ab / d.sqrt();
        let r1 = -0.5 * ab * d1 / (d * d.sqrt());
        let r2 = ab * (0.75 * d1 * d1 / (d * d * d.sqrt()) - 0.5 * d2 / (d * d.sqrt()));
        (r - base, r1, r2)
    });
    RadialSurface::new(vec![0.0; DIM], base, Arc::new(field))
}

/// The curve `r(θ) = 1 + ε cos(mθ)`.
pub fn cosine_perturbed_circle(eps: f64, mode: u32) -> Result<RadialSurface> {
    if !(eps.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need |eps| < 1, got {eps}"
        )));
    }
    let m = mode as f64;
    let field = AngularField::new(move |t: f64| {
        let (s, c) = (m * t).sin_cos();
        (eps * c, -eps * m * s, -eps * m * m * c)
    });
    RadialSurface::new(vec![0.0; DIM], 1.0, Arc::new(field))
}

/// Mesh size: `radial` cells on `ρ ∈ [0, 1]` and `angular` nodes on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorsionMesh {
    pub radial: usize,
    pub angular: usize,
}

impl TorsionMesh {
    pub fn new(radial: usize, angular: usize) -> Result<Self> {
        if radial < 4 || angular < 8 {
            return Err(Error::InvalidParameter(format!(
                "mesh needs radial >= 4 and angular >= 8, got ({radial}, {angular})"
            )));
        }
        Ok(Self { radial, angular })
    }

    pub fn refined(&self) -> Self {
        Self {
            radial: 2 * self.radial,
            angular: 2 * self.angular,
        }
    }
}

/// Mesh used by the acceptance checks.
pub const ACCEPTANCE_MESH: TorsionMesh = TorsionMesh {
    radial: 64,
    angular: 256,
};

/// `R`, `R'`, `R''` of the boundary at the mesh angles.
#[derive(Debug, Clone)]
struct BoundaryCurve {
    theta: Vec<f64>,
    r: Vec<f64>,
    dr: Vec<f64>,
    ddr: Vec<f64>,
}

fn radius_jet(domain: &RadialSurface, theta: f64) -> Result<(f64, f64, f64)> {
    let (s, c) = theta.sin_cos();
    let e = [c, s];
    let perp = [-s, c];
    let jet = domain.omega().jet(&e)?;
    let g = jet.gradient();
    let r = domain.base_radius() + jet.value();
    let dr = g[0] * perp[0] + g[1] * perp[1];
    let ddr = jet.hessian_bilinear(&perp, &perp) - (g[0] * e[0] + g[1] * e[1]);
    Ok((r, dr, ddr))
}

impl BoundaryCurve {
    fn sample(domain: &RadialSurface, count: usize) -> Result<Self> {
        let mut out = Self {
            theta: Vec::with_capacity(count),
            r: Vec::with_capacity(count),
            dr: Vec::with_capacity(count),
            ddr: Vec::with_capacity(count),
        };
        for j in 0..count {
            let t = 2.0 * PI * j as f64 / count as f64;
            let (r, dr, ddr) = radius_jet(domain, t)?;
            if !(r > 0.0) || !r.is_finite() {
                let (s, c) = t.sin_cos();
                return Err(Error::NotStarShaped {
                    witness: vec![c, s],
                });
            }
            out.theta.push(t);
            out.r.push(r);
            out.dr.push(dr);
            out.ddr.push(ddr);
        }
        Ok(out)
    }

    fn speed(&self, j: usize) -> f64 {
        self.r[j].hypot(self.dr[j])
    }

    /// Signed curvature of the polar graph, positive for convex arcs.
    fn curvature(&self, j: usize) -> f64 {
        let (r, r1, r2) = (self.r[j], self.dr[j], self.ddr[j]);
        (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5)
    }

    /// Outward unit normal, relative to the polar frame at `θ_j`.
    fn normal(&self, j: usize) -> [f64; 2] {
        let (s, c) = self.theta[j].sin_cos();
        let v = self.speed(j);
        let (r, r1) = (self.r[j], self.dr[j]);
        [(r * c + r1 * s) / v, (r * s - r1 * c) / v]
    }
}

/// Solution of the torsion problem on a polar mesh. Coordinates are taken
/// relative to the center of the domain.
#[derive(Clone)]
pub struct TorsionSolution {
    domain: RadialSurface,
    mesh: TorsionMesh,
    curve: BoundaryCurve,
    /// `u[i * angular + j]` at `ρ = i/radial`, `θ_j`; row 0 repeats the
    /// origin value and row `radial` is the boundary.
    u: Vec<f64>,
    u_nu: Vec<f64>,
    z_min: [f64; 2],
    pde_residual: f64,
}

impl std::fmt::Debug for TorsionSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorsionSolution")
            .field("mesh", &self.mesh)
            .field("z_min", &self.z_min)
            .field("pde_residual", &self.pde_residual)
            .finish()
    }
}

impl TorsionSolution {
    pub fn domain(&self) -> &RadialSurface {
        &self.domain
    }

    pub fn mesh(&self) -> TorsionMesh {
        self.mesh
    }

    pub fn u(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.mesh.angular + j % self.mesh.angular]
    }

    /// Grid node `(i, j)` relative to the center.
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        let rho = i as f64 / self.mesh.radial as f64;
        let (s, c) = self.curve.theta[j].sin_cos();
        [rho * self.curve.r[j] * c, rho * self.curve.r[j] * s]
    }

    pub fn angles(&self) -> &[f64] {
        &self.curve.theta
    }

    /// Outward normal derivative at the boundary nodes.
    pub fn u_nu(&self) -> &[f64] {
        &self.u_nu
    }

    /// Discrete minimizer of `u`, relative to the center.
    pub fn z_min(&self) -> [f64; 2] {
        self.z_min
    }

    /// Max-norm residual of the discrete equations.
    pub fn pde_residual(&self) -> f64 {
        self.pde_residual
    }

    pub fn max_interior_value(&self) -> f64 {
        self.u[..self.mesh.radial * self.mesh.angular]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn dtheta(&self) -> f64 {
        2.0 * PI / self.mesh.angular as f64
    }

    fn boundary_integral(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.mesh.angular)
            .map(|j| f(j) * self.curve.speed(j))
            .sum::<f64>()
            * self.dtheta()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_integral(|_| 1.0)
    }

    pub fn area(&self) -> f64 {
        0.5 * self.curve.r.iter().map(|r| r * r).sum::<f64>() * self.dtheta()
    }

    /// `H₀ = |Γ| / (2|Ω|)`.
    pub fn h0(&self) -> f64 {
        self.perimeter() / (2.0 * self.area())
    }

    /// Boundary curvature at `θ_j`.
    pub fn curvature(&self, j: usize) -> f64 {
        self.curve.curvature(j)
    }

    /// `(∫_Γ u_ν − 2|Ω|) / (2|Ω|)`.
    pub fn divergence_defect(&self) -> f64 {
        let flux = self.boundary_integral(|j| self.u_nu[j]);
        (flux - 2.0 * self.area()) / (2.0 * self.area())
    }

    /// `∫_Ω |D²h|²` with `D²h = I − D²u`, using central differences inside
    /// and second-order one-sided differences on the boundary row.
    pub fn hessian_defect_integral(&self) -> f64 {
        let (m, k) = (self.mesh.radial, self.mesh.angular);
        let h = 1.0 / m as f64;
        let dt = self.dtheta();
        let mut total = 0.0;
        for i in 1..=m {
            let rho = i as f64 * h;
            let weight = if i == m { 0.5 * h } else { h };
            for j in 0..k {
                let d = |jj: usize| -> (f64, f64) {
                    let jj = jj % k;
                    if i == m {
                        let (u0, u1, u2, u3) = (
                            self.u(m, jj),
                            self.u(m - 1, jj),
                            self.u(m - 2, jj),
                            self.u(m - 3, jj),
                        );
                        (
                            (3.0 * u0 - 4.0 * u1 + u2) / (2.0 * h),
                            (2.0 * u0 - 5.0 * u1 + 4.0 * u2 - u3) / (h * h),
                        )
                    } else {
                        let (up, uc, um) = (self.u(i + 1, jj), self.u(i, jj), self.u(i - 1, jj));
                        ((up - um) / (2.0 * h), (up - 2.0 * uc + um) / (h * h))
                    }
                };
                let (u_r, u_rr) = d(j);
                let (u_r_plus, _) = d(j + 1);
                let (u_r_minus, _) = d(j + k - 1);
                let (up, uc, um) = (self.u(i, j + 1), self.u(i, j), self.u(i, j + k - 1));
                let u_t = (up - um) / (2.0 * dt);
                let u_tt = (up - 2.0 * uc + um) / (dt * dt);
                let u_rt = (u_r_plus - u_r_minus) / (2.0 * dt);

                let (rr, r1, r2) = (self.curve.r[j], self.curve.dr[j], self.curve.ddr[j]);
                let g = r1 / rr;
                let g1 = r2 / rr - g * g;
                let radius = rho * rr;
                // physical polar derivatives
                let p_r = u_r / rr;
                let p_rr = u_rr / (rr * rr);
                let p_t = u_t - rho * g * u_r;
                let p_tt = u_tt - 2.0 * rho * g * u_rt
                    + rho * rho * g * g * u_rr
                    + rho * (g * g - g1) * u_r;
                let p_rt = (u_rt - g * u_r - rho * g * u_rr) / rr;
                let h_rr = p_rr;
                let h_rt = p_rt / radius - p_t / (radius * radius);
                let h_tt = p_r / radius + p_tt / (radius * radius);
                let density = (1.0 - h_rr).powi(2) + 2.0 * h_rt * h_rt + (1.0 - h_tt).powi(2);
                total += density * weight * rho * rr * rr * dt;
            }
        }
        total
    }
}

fn assemble(
    curve: &BoundaryCurve,
    mesh: TorsionMesh,
) -> (Vec<Triplet<usize, usize, f64>>, Vec<f64>) {
    let (m, k) = (mesh.radial, mesh.angular);
    let h = 1.0 / m as f64;
    let dt = 2.0 * PI / k as f64;
    // unknown 0 is the origin, (i, j) with 1 ≤ i < m is 1 + (i−1)k + j
    let index = |i: usize, j: usize| -> Option<usize> {
        match i {
            0 => Some(0),
            i if i >= m => None,
            i => Some(1 + (i - 1) * k + j % k),
        }
    };
    let n = 1 + (m - 1) * k;
    let mut triplets = Vec::with_capacity(9 * n + k);
    let mut rhs = vec![0.0; n];

    // Flux balance over ρ < h/2, divided by h² to match the interior rows:
    // Σ_j Δθ [ρ(1+g²) U_ρ − g U_θ] at ρ = h/2 equals 2 Σ_j Δθ (h²/8) R².
    let mut diag0 = 0.0;
    for j in 0..k {
        let g = curve.dr[j] / curve.r[j];
        let radial = 0.5 * (1.0 + g * g) * dt / (h * h);
        let mixed = 0.25 * g / (h * h);
        diag0 -= radial;
        triplets.push(Triplet::new(0, index(1, j).unwrap(), radial));
        triplets.push(Triplet::new(0, index(1, j + 1).unwrap(), -mixed));
        triplets.push(Triplet::new(0, index(1, j + k - 1).unwrap(), mixed));
        rhs[0] += 0.25 * dt * curve.r[j] * curve.r[j];
    }
    triplets.push(Triplet::new(0, 0, diag0));

    for i in 1..m {
        let rho = i as f64 * h;
        for j in 0..k {
            let row = index(i, j).unwrap();
            let (r, r1, r2) = (curve.r[j], curve.dr[j], curve.ddr[j]);
            let g = r1 / r;
            let g1 = r2 / r - g * g;
            let a = (1.0 + g * g) / (h * h);
            let b = (1.0 + g * g - g1) / (rho * 2.0 * h);
            let c = 1.0 / (rho * rho * dt * dt);
            let d = -2.0 * g / (rho * 4.0 * h * dt);
            let mut push = |ii: usize, jj: usize, v: f64| {
                if let Some(col) = index(ii, jj) {
                    triplets.push(Triplet::new(row, col, v));
                }
            };
            push(i, j, -2.0 * a - 2.0 * c);
            push(i + 1, j, a + b);
            push(i - 1, j, a - b);
            push(i, j + 1, c);
            push(i, j + k - 1, c);
            push(i + 1, j + 1, d);
            push(i + 1, j + k - 1, -d);
            push(i - 1, j + 1, -d);
            push(i - 1, j + k - 1, d);
            rhs[row] = 2.0 * r * r;
        }
    }
    (triplets, rhs)
}

/// Solves `Δu = 2` in the domain bounded by the radial curve, `u = 0` on it.
pub fn solve_torsion(domain: &RadialSurface, mesh: TorsionMesh) -> Result<TorsionSolution> {
    if domain.dim_n() != DIM {
        return Err(Error::InvalidParameter(format!(
            "torsion solver is planar, got dimension {}",
            domain.dim_n()
        )));
    }
    let mesh = TorsionMesh::new(mesh.radial, mesh.angular)?;
    let curve = BoundaryCurve::sample(domain, mesh.angular)?;
    let (m, k) = (mesh.radial, mesh.angular);
    let (triplets, rhs) = assemble(&curve, mesh);
    let n = rhs.len();
    let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))?;
    let lu = matrix
        .sp_lu()
        .map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
    let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);

    let mut pde_residual = 0.0f64;
    let mut ax = vec![0.0; n];
    for t in &triplets {
        ax[t.row] += t.val * x[(t.col, 0)];
    }
    for (lhs, r) in ax.iter().zip(&rhs) {
        pde_residual = pde_residual.max((lhs - r).abs());
    }
    if !pde_residual.is_finite()
        || pde_residual > 1e-6 * rhs.iter().fold(1.0f64, |a, r| a.max(r.abs()))
    {
        return Err(Error::Solver(format!(
            "torsion solve did not converge, residual {pde_residual}"
        )));
    }

    let mut u = vec![0.0; (m + 1) * k];
    for j in 0..k {
        u[j] = x[(0, 0)];
    }
    for i in 1..m {
        for j in 0..k {
            u[i * k + j] = x[(1 + (i - 1) * k + j, 0)];
        }
    }
    let h = 1.0 / m as f64;
    let u_nu = (0..k)
        .map(|j| {
            let at = |i: usize| u[i * k + j];
            let u_rho =
                (11.0 * at(m) - 18.0 * at(m - 1) + 9.0 * at(m - 2) - 2.0 * at(m - 3)) / (6.0 * h);
            u_rho * curve.speed(j) / (curve.r[j] * curve.r[j])
        })
        .collect();

    let mut best = (0, 0);
    for i in 0..m {
        for j in 0..k {
            if u[i * k + j] < u[best.0 * k + best.1] {
                best = (i, j);
            }
        }
    }
    let mut solution = TorsionSolution {
        domain: domain.clone(),
        mesh,
        curve,
        u,
        u_nu,
        z_min: [0.0; 2],
        pde_residual,
    };
    solution.z_min = solution.node(best.0, best.1);
    Ok(solution)
}

/// Both sides of `∫_Ω|D²h|² + H₀∫_Γ(u_ν − 1/H₀)² = ∫_Γ(H₀ − H) u_ν²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    pub hessian_term: f64,
    pub boundary_term: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub absolute: f64,
    pub relative: f64,
}

/// Floor for the denominator of the relative residual.
const RESIDUAL_FLOOR: f64 = 1e-300;

pub fn fundamental_identity_residual(solution: &TorsionSolution) -> IdentityResidual {
    let h0 = solution.h0();
    let hessian_term = solution.hessian_defect_integral();
    let boundary_term = h0 * solution.boundary_integral(|j| (solution.u_nu[j] - 1.0 / h0).powi(2));
    let rhs =
        solution.boundary_integral(|j| (h0 - solution.curvature(j)) * solution.u_nu[j].powi(2));
    let lhs = hessian_term + boundary_term;
    let absolute = (lhs - rhs).abs();
    IdentityResidual {
        hessian_term,
        boundary_term,
        lhs,
        rhs,
        absolute,
        relative: absolute / lhs.abs().max(rhs.abs()).max(RESIDUAL_FLOOR),
    }
}

/// Euclidean distance from `x` (relative to the center) to the boundary
/// curve: nearest vertex of a polyline through the mesh angles, then a
/// Newton polish of `(c(θ) − x)·c'(θ) = 0` on the exact curve. Falls back
/// to the polyline distance when the polish does not converge.
pub fn boundary_distance(solution: &TorsionSolution, x: [f64; 2]) -> Result<f64> {
    let curve = &solution.curve;
    let k = curve.theta.len();
    let point = |j: usize| {
        let (s, c) = curve.theta[j].sin_cos();
        [curve.r[j] * c, curve.r[j] * s]
    };
    let dist2 = |p: [f64; 2]| (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
    let nearest = (0..k)
        .min_by(|&a, &b| dist2(point(a)).total_cmp(&dist2(point(b))))
        .unwrap();
    let mut best = f64::INFINITY;
    for (a, b) in [(nearest + k - 1, nearest), (nearest, nearest + 1)] {
        let (p, q) = (point(a % k), point(b % k));
        let d = [q[0] - p[0], q[1] - p[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let s = (((x[0] - p[0]) * d[0] + (x[1] - p[1]) * d[1]) / len2).clamp(0.0, 1.0);
        best = best.min(dist2([p[0] + s * d[0], p[1] + s * d[1]]));
    }
    let dt = 2.0 * PI / k as f64;
    let t0 = curve.theta[nearest];
    let mut t = t0;
    let mut converged = false;
    for _ in 0..30 {
        let (r, r1, r2) = radius_jet(&solution.domain, t)?;
        let (s, c) = t.sin_cos();
        let p = [r * c - x[0], r * s - x[1]];
        let d1 = [r1 * c - r * s, r1 * s + r * c];
        let d2 = [(r2 - r) * c - 2.0 * r1 * s, (r2 - r) * s + 2.0 * r1 * c];
        let f = p[0] * d1[0] + p[1] * d1[1];
        let df = d1[0] * d1[0] + d1[1] * d1[1] + p[0] * d2[0] + p[1] * d2[1];
        if f.abs() <= 1e-15 * (d1[0] * d1[0] + d1[1] * d1[1]) {
            converged = true;
            break;
        }
        if !(df > 0.0) {
            break;
        }
        let step = f / df;
        t = (t - step).clamp(t0 - dt, t0 + dt);
        if step.abs() < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Ok(best.sqrt());
    }
    let (r, _, _) = radius_jet(&solution.domain, t)?;
    let (s, c) = t.sin_cos();
    Ok(dist2([r * c, r * s]).sqrt())
}

/// Minima over the interior nodes of `−u/δ²` and `−u/δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfRatios {
    pub quadratic: f64,
    pub linear: f64,
}

pub fn hopf_bounds_check(solution: &TorsionSolution) -> Result<HopfRatios> {
    let (m, k) = (solution.mesh.radial, solution.mesh.angular);
    let mut out = HopfRatios {
        quadratic: f64::INFINITY,
        linear: f64::INFINITY,
    };
    for i in 0..m {
        let columns = if i == 0 { 1 } else { k };
        for j in 0..columns {
            let delta = boundary_distance(solution, solution.node(i, j))?;
            let v = -solution.u(i, j);
            out.quadratic = out.quadratic.min(v / (delta * delta));
            out.linear = out.linear.min(v / delta);
        }
    }
    Ok(out)
}

/// The two sides of the rough stability inequality:
/// `‖|x−z| − 1/H₀‖_{L²(Γ)} + ‖ν/H₀ − (x−z)‖_{L²(Γ)}` and
/// `‖H − H₀‖_{L^r(Γ)}^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughStability {
    pub lhs: f64,
    pub rhs: f64,
}

impl RoughStability {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

pub fn rough_stability_check(solution: &TorsionSolution, r: f64) -> Result<RoughStability> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("need r >= 1, got {r}")));
    }
    let h0 = solution.h0();
    let z = solution.z_min;
    let k = solution.mesh.angular;
    let rel = |j: usize| {
        let p = solution.node(solution.mesh.radial, j);
        [p[0] - z[0], p[1] - z[1]]
    };
    let radial = solution.boundary_integral(|j| {
        let d = rel(j);
        (d[0].hypot(d[1]) - 1.0 / h0).powi(2)
    });
    let normal = solution.boundary_integral(|j| {
        let d = rel(j);
        let nu = solution.curve.normal(j);
        (nu[0] / h0 - d[0]).powi(2) + (nu[1] / h0 - d[1]).powi(2)
    });
    let curvature = solution.boundary_integral(|j| (solution.curvature(j % k) - h0).abs().powf(r));
    Ok(RoughStability {
        lhs: radial.sqrt() + normal.sqrt(),
        rhs: curvature.powf(0.5 / r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TorsionMesh {
        TorsionMesh::new(16, 64).unwrap()
    }

    #[test]
    fn angular_field_derivatives() {
        let f = AngularField::new(|t: f64| (t.cos() * 2.0, -2.0 * t.sin(), -2.0 * t.cos()));
        // 2 cos θ = 2x/|x|
        let x = [0.6, 0.8];
        let jet = f.jet(&x).unwrap();
        assert!((jet.value() - 1.2).abs() < 1e-14);
        // ∂x (2x/r) = 2 y²/r³, ∂y (2x/r) = −2xy/r³
        assert!((jet.gradient()[0] - 2.0 * 0.64).abs() < 1e-14);
        assert!((jet.gradient()[1] + 2.0 * 0.48).abs() < 1e-14);
        // ∂xx (2x/r) = −6xy²/r⁵
        assert!((jet.hessian(0, 0) + 6.0 * 0.6 * 0.64).abs() < 1e-13);
        assert!(f.jet(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn ellipse_radius_function() {
        let e = ellipse(1.0, 1.2).unwrap();
        for t in [0.0, 0.3, 1.0, 2.5] {
            let (r, r1, r2) = radius_jet(&e, t).unwrap();
            let (s, c) = f64::sin_cos(t);
            assert!(((r * c).powi(2) + (r * s / 1.2).powi(2) - 1.0).abs() < 1e-13);
            let hstep = 1e-4;
            let (rp, _, _) = radius_jet(&e, t + hstep).unwrap();
            let (rm, _, _) = radius_jet(&e, t - hstep).unwrap();
            assert!((r1 - (rp - rm) / (2.0 * hstep)).abs() < 1e-7);
            assert!((r2 - (rp - 2.0 * r + rm) / (hstep * hstep)).abs() < 1e-5);
        }
    }

    #[test]
    fn disk_is_exact() {
        let sol = solve_torsion(&disk(1.5).unwrap(), small()).unwrap();
        for i in 0..=16 {
            for j in [0, 5, 40] {
                let p = sol.node(i, j);
                let exact = 0.5 * (p[0] * p[0] + p[1] * p[1] - 2.25);
                assert!((sol.u(i, j) - exact).abs() < 1e-10);
            }
        }
        assert!(sol.u_nu().iter().all(|v| (v - 1.5).abs() < 1e-9));
        assert_eq!(sol.z_min(), [0.0, 0.0]);
        assert!(sol.pde_residual() < 1e-9);
        let id = fundamental_identity_residual(&sol);
        assert!(id.absolute < 1e-8 && id.lhs.abs() < 1e-8);
    }

    #[test]
    fn ellipse_is_reproduced() {
        let (a, b) = (1.0, 1.2);
        let sol = solve_torsion(&ellipse(a, b).unwrap(), small()).unwrap();
        let c = 1.0 / (1.0 / (a * a) + 1.0 / (b * b));
        for i in 0..=16 {
            for j in 0..64 {
                let p = sol.node(i, j);
                let exact = c * (p[0] * p[0] / (a * a) + p[1] * p[1] / (b * b) - 1.0);
                assert!((sol.u(i, j) - exact).abs() < 1e-10);
            }
        }
        // D²h = I − 2c diag(1/a², 1/b²) is constant
        let d = (1.0 - 2.0 * c / (a * a)).powi(2) + (1.0 - 2.0 * c / (b * b)).powi(2);
        let exact = d * PI * a * b;
        assert!((sol.hessian_defect_integral() - exact).abs() < 1e-9 * exact);
        assert!(fundamental_identity_residual(&sol).relative < 1e-9);
    }

    #[test]
    fn perturbed_circle_converges() {
        let domain = cosine_perturbed_circle(0.05, 3).unwrap();
        let coarse = solve_torsion(&domain, TorsionMesh::new(32, 128).unwrap()).unwrap();
        let fine = solve_torsion(&domain, TorsionMesh::new(64, 256).unwrap()).unwrap();
        assert!(coarse.max_interior_value() < 0.0);
        let rc = fundamental_identity_residual(&coarse);
        let rf = fundamental_identity_residual(&fine);
        assert!(rf.lhs > 0.0 && rf.rhs > 0.0);
        assert!(rf.relative < 0.05);
        assert!((rc.relative / rf.relative).log2() >= 1.5, "{rc:?} {rf:?}");
        assert!(fine.divergence_defect().abs() < 5e-3);
    }

    #[test]
    fn self_convergence_at_the_center() {
        let domain = cosine_perturbed_circle(0.1, 3).unwrap();
        let center: Vec<f64> = [(16, 64), (32, 128), (64, 256)]
            .iter()
            .map(|&(m, k)| {
                solve_torsion(&domain, TorsionMesh::new(m, k).unwrap())
                    .unwrap()
                    .u(0, 0)
            })
            .collect();
        let order = ((center[0] - center[1]) / (center[1] - center[2]))
            .abs()
            .log2();
        assert!(order >= 1.8, "observed order {order}");
    }

    #[test]
    fn hopf_ratios_on_the_disk() {
        let sol = solve_torsion(&disk(1.0).unwrap(), small()).unwrap();
        let d = boundary_distance(&sol, [0.3, -0.2]).unwrap();
        assert!((d - (1.0 - 0.13f64.sqrt())).abs() < 1e-12);
        let h = hopf_bounds_check(&sol).unwrap();
        assert!(h.quadratic >= 0.5 - 1e-6 && h.quadratic < 0.5 + 1e-9);
        assert!(h.linear > 0.0);
    }

    #[test]
    fn rough_stability_vanishes_on_disk() {
        let sol = solve_torsion(&disk(2.0).unwrap(), small()).unwrap();
        let rs = rough_stability_check(&sol, 2.0).unwrap();
        assert!(rs.lhs < 1e-9 && rs.rhs < 1e-9);
        assert!(rough_stability_check(&sol, 0.5).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let sphere = RadialSurface::sphere(vec![0.0; 3], 1.0).unwrap();
        assert!(solve_torsion(&sphere, small()).is_err());
        assert!(TorsionMesh::new(2, 64).is_err());
        assert!(ellipse(0.0, 1.0).is_err());
        assert!(cosine_perturbed_circle(1.5, 2).is_err());
    }
}

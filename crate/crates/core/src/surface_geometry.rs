//! Hypersurfaces as Cartesian graphs or as radial graphs over the unit
//! sphere: normals, mean curvature, radii and star-shape extraction.
//!
//! Sign convention: the mean curvature is the average of the principal
//! curvatures with respect to the outward normal, so the unit sphere has
//! `H = 1`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::{Jet2, ScalarField};

/// `√(1 + |g|²)`.
pub fn graph_area_element(gradient: &[f64]) -> f64 {
    (1.0 + gradient.iter().map(|g| g * g).sum::<f64>()).sqrt()
}

/// Mean curvature of the graph `x_N = φ(x)` at a point, from the 2-jet of `φ`
/// in `N − 1` variables:
///
/// ```text
/// H = −Δφ / ((N−1) W) + ∇φᵀ D²φ ∇φ / ((N−1) W³),   W = √(1 + |∇φ|²).
/// ```
pub fn graph_mean_curvature(jet: &Jet2, dim_n: usize) -> f64 {
    debug_assert_eq!(jet.dim() + 1, dim_n);
    let g = jet.gradient();
    let w2 = 1.0 + jet.gradient_norm_sq();
    let w = w2.sqrt();
    let n1 = (dim_n - 1) as f64;
    -jet.laplacian() / (n1 * w) + jet.hessian_bilinear(g, g) / (n1 * w2 * w)
}

/// A hypersurface given as the graph of `profile` over the flat ball of
/// radius `patch_radius` in `R^{N−1}`.
#[derive(Clone)]
pub struct GraphPatch {
    dim_n: usize,
    profile: Arc<dyn ScalarField>,
    patch_radius: f64,
}

impl GraphPatch {
    pub fn new(dim_n: usize, profile: Arc<dyn ScalarField>, patch_radius: f64) -> Result<Self> {
        if profile.dim() + 1 != dim_n {
            return Err(Error::Mismatch {
                expected: dim_n - 1,
                got: profile.dim(),
            });
        }
        if !(patch_radius > 0.0) {
            return Err(Error::InvalidParameter(
                "patch radius must be positive".into(),
            ));
        }
        Ok(Self {
            dim_n,
            profile,
            patch_radius,
        })
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn patch_radius(&self) -> f64 {
        self.patch_radius
    }

    pub fn profile(&self) -> &Arc<dyn ScalarField> {
        &self.profile
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r >= self.patch_radius {
            return Err(Error::Domain(format!(
                "|x| = {r} outside the patch of radius {}",
                self.patch_radius
            )));
        }
        Ok(())
    }

    pub fn jet(&self, x: &[f64]) -> Result<Jet2> {
        self.check(x)?;
        self.profile.jet(x)
    }

    /// The surface point `(x, φ(x))`.
    pub fn point(&self, x: &[f64]) -> Result<Vec<f64>> {
        let jet = self.jet(x)?;
        let mut p = x.to_vec();
        p.push(jet.value());
        Ok(p)
    }

    /// Upward unit normal `(−∇φ, 1) / √(1 + |∇φ|²)`.
    pub fn normal(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(graph_normal(&self.jet(x)?))
    }

    pub fn area_element(&self, x: &[f64]) -> Result<f64> {
        Ok(graph_area_element(self.jet(x)?.gradient()))
    }

    pub fn mean_curvature(&self, x: &[f64]) -> Result<f64> {
        Ok(graph_mean_curvature(&self.jet(x)?, self.dim_n))
    }
}

/// Upward unit normal of a graph from the jet of its profile.
pub fn graph_normal(jet: &Jet2) -> Vec<f64> {
    let w = graph_area_element(jet.gradient());
    let mut n: Vec<f64> = jet.gradient().iter().map(|g| -g / w).collect();
    n.push(1.0 / w);
    n
}

/// Outward unit normal of the radial graph `y = c + (b + ω(x)) x`:
///
/// ```text
/// ν = ((b + ω) x − ∇_S ω) / √((b + ω)² + |∇_S ω|²).
/// ```
///
/// `sphere_gradient` must be tangent at `x`.
pub fn radial_normal(
    base_radius: f64,
    omega: f64,
    sphere_gradient: &[f64],
    x: &[f64],
) -> Result<Vec<f64>> {
    let rad = base_radius + omega;
    let g2: f64 = sphere_gradient.iter().map(|g| g * g).sum();
    let denom = (rad * rad + g2).sqrt();
    if !(denom > f64::MIN_POSITIVE) || !denom.is_finite() {
        return Err(Error::Degenerate(format!(
            "radial normal denominator {denom}"
        )));
    }
    Ok(x.iter()
        .zip(sphere_gradient)
        .map(|(xi, gi)| (rad * xi - gi) / denom)
        .collect())
}

/// Tangential projection `∇W − (∇W·x) x` of an ambient gradient at the
/// unit vector `x`.
pub fn tangential_gradient(gradient: &[f64], x: &[f64]) -> Vec<f64> {
    let radial: f64 = gradient.iter().zip(x).map(|(g, x)| g * x).sum();
    gradient
        .iter()
        .zip(x)
        .map(|(g, x)| g - radial * x)
        .collect()
}

/// A radial graph `{c + (b + ω(x)) x : x ∈ S^{N−1}}`. The function `ω` is
/// supplied through an ambient extension `W : R^N → R` whose jet is
/// evaluated at unit vectors; only its restriction to the sphere matters.
#[derive(Clone)]
pub struct RadialSurface {
    center: Vec<f64>,
    base_radius: f64,
    omega: Arc<dyn ScalarField>,
}

impl RadialSurface {
    pub fn new(center: Vec<f64>, base_radius: f64, omega: Arc<dyn ScalarField>) -> Result<Self> {
        if !(base_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "base radius must be positive, got {base_radius}"
            )));
        }
        if omega.dim() != center.len() {
            return Err(Error::Mismatch {
                expected: center.len(),
                got: omega.dim(),
            });
        }
        if center.len() < 2 || center.len() > crate::jet::MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "unsupported dimension {}",
                center.len()
            )));
        }
        Ok(Self {
            center,
            base_radius,
            omega,
        })
    }

    /// The round sphere of radius `b` about `center`.
    pub fn sphere(center: Vec<f64>, radius: f64) -> Result<Self> {
        let dim = center.len();
        Self::new(
            center,
            radius,
            Arc::new(crate::jet::ConstantField { dim, value: 0.0 }),
        )
    }

    pub fn dim_n(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn omega(&self) -> &Arc<dyn ScalarField> {
        &self.omega
    }

    fn omega_jet(&self, x: &[f64]) -> Result<Jet2> {
        if x.len() != self.dim_n() {
            return Err(Error::Mismatch {
                expected: self.dim_n(),
                got: x.len(),
            });
        }
        let jet = self.omega.jet(x)?;
        if self.base_radius + jet.value() <= 0.0 {
            return Err(Error::Degenerate(format!(
                "radius b + ω = {} is not positive",
                self.base_radius + jet.value()
            )));
        }
        Ok(jet)
    }

    /// The surface point over the unit vector `x`.
    pub fn point(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = self.omega_jet(x)?.value();
        Ok(x.iter()
            .zip(&self.center)
            .map(|(xi, ci)| ci + (self.base_radius + w) * xi)
            .collect())
    }

    pub fn normal(&self, x: &[f64]) -> Result<Vec<f64>> {
        let jet = self.omega_jet(x)?;
        let grad = tangential_gradient(jet.gradient(), x);
        radial_normal(self.base_radius, jet.value(), &grad, x)
    }

    pub fn mean_curvature(&self, x: &[f64]) -> Result<f64> {
        radial_mean_curvature(self, x)
    }
}

/// Hyperspherical angles of a unit vector (inverse of
/// [`crate::quadrature::hyperspherical_point`]).
pub fn hyperspherical_angles(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut angles = Vec::with_capacity(n - 1);
    let mut tail2: f64 = x.iter().map(|v| v * v).sum();
    for j in 0..n - 2 {
        tail2 -= x[j] * x[j];
        angles.push(tail2.max(0.0).sqrt().atan2(x[j]));
    }
    angles.push(x[n - 1].atan2(x[n - 2]));
    angles
}

/// Derivative of order `order` of the `i`-th angular factor of component
/// `j` of the hyperspherical map in `R^n`.
fn angular_factor(n: usize, j: usize, i: usize, a: f64, order: usize) -> f64 {
    let (s, c) = a.sin_cos();
    let kind = if i < j {
        0 // sin
    } else if i == j && j < n - 1 {
        1 // cos
    } else {
        2 // one
    };
    match (kind, order) {
        (2, 0) => 1.0,
        (2, _) => 0.0,
        (0, 0) => s,
        (0, 1) => c,
        (0, _) => -s,
        (_, 0) => c,
        (_, 1) => -s,
        _ => -c,
    }
}

/// Point, first and second angle derivatives of the hyperspherical map.
struct AngleFrame {
    x: Vec<f64>,
    xm: Vec<Vec<f64>>,
    xmn: Vec<Vec<Vec<f64>>>,
}

fn angle_frame(angles: &[f64]) -> AngleFrame {
    let n = angles.len() + 1;
    let d = n - 1;
    let comp = |orders: &dyn Fn(usize) -> usize| -> Vec<f64> {
        (0..n)
            .map(|j| {
                (0..d)
                    .map(|i| angular_factor(n, j, i, angles[i], orders(i)))
                    .product()
            })
            .collect()
    };
    let x = comp(&|_| 0);
    let xm: Vec<Vec<f64>> = (0..d).map(|m| comp(&|i| usize::from(i == m))).collect();
    let mut xmn = vec![vec![Vec::new(); d]; d];
    for m in 0..d {
        for k in m..d {
            let v = comp(&|i| usize::from(i == m) + usize::from(i == k));
            xmn[k][m] = v.clone();
            xmn[m][k] = v;
        }
    }
    AngleFrame { x, xm, xmn }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Mean curvature of a radial graph at the point over the unit vector `x`,
/// from the first and second fundamental forms of the hyperspherical
/// parameterization. Points where the angle chart degenerates (the poles
/// `±e₁` and lower-dimensional analogues) are rejected.
pub fn radial_mean_curvature(surface: &RadialSurface, x: &[f64]) -> Result<f64> {
    let n = surface.dim_n();
    let jet = surface.omega_jet(x)?;
    let angles = hyperspherical_angles(x);
    let min_sin = angles[..n - 2]
        .iter()
        .map(|a| a.sin().abs())
        .fold(1.0, f64::min);
    if min_sin < 1e-8 {
        return Err(Error::Degenerate(format!(
            "angle chart is singular at {x:?} (pole of the parameterization)"
        )));
    }
    let frame = angle_frame(&angles);
    let d = n - 1;
    let b = surface.base_radius;
    let rad = b + jet.value();
    let grad = jet.gradient();
    let wm: Vec<f64> = frame.xm.iter().map(|v| dot(grad, v)).collect();
    let tangential = tangential_gradient(grad, &frame.x);
    let nu = radial_normal(b, jet.value(), &tangential, &frame.x)?;

    let xm_tan: Vec<Vec<f64>> = (0..d)
        .map(|m| {
            (0..n)
                .map(|j| wm[m] * frame.x[j] + rad * frame.xm[m][j])
                .collect()
        })
        .collect();
    let mut first = DMatrix::<f64>::zeros(d, d);
    let mut second = DMatrix::<f64>::zeros(d, d);
    for m in 0..d {
        for k in m..d {
            first[(m, k)] = dot(&xm_tan[m], &xm_tan[k]);
            first[(k, m)] = first[(m, k)];
            let wmk =
                jet.hessian_bilinear(&frame.xm[m], &frame.xm[k]) + dot(grad, &frame.xmn[m][k]);
            let mut xmk_nu = 0.0;
            for j in 0..n {
                let v = wmk * frame.x[j]
                    + wm[m] * frame.xm[k][j]
                    + wm[k] * frame.xm[m][j]
                    + rad * frame.xmn[m][k][j];
                xmk_nu += v * nu[j];
            }
            second[(m, k)] = -xmk_nu;
            second[(k, m)] = -xmk_nu;
        }
    }
    let chol = first
        .cholesky()
        .ok_or_else(|| Error::Degenerate("first fundamental form is not positive".into()))?;
    let shape = chol.solve(&second);
    let h = shape.trace() / d as f64;
    if !h.is_finite() {
        return Err(Error::NonFinite("radial mean curvature".into()));
    }
    Ok(h)
}

/// Ambient extension of the radial function of the graph `x_N = φ(x')` over
/// the upper hemisphere: `W(y) = ρ(y) − b`, where `ρ` solves
/// `ρ y_N = φ(ρ y')`. Jets of `ρ` follow from implicit differentiation.
#[derive(Clone)]
pub struct GraphAsRadial {
    profile: Arc<dyn ScalarField>,
    base_radius: f64,
}

impl GraphAsRadial {
    pub fn new(profile: Arc<dyn ScalarField>, base_radius: f64) -> Self {
        Self {
            profile,
            base_radius,
        }
    }

    /// Solves `F(y, ρ) = ρ y_N − φ(ρ y') = 0` for `ρ` by Newton's method.
    fn solve(&self, y: &[f64]) -> Result<(f64, Jet2)> {
        let n = y.len();
        if y[n - 1] <= 0.0 {
            return Err(Error::Domain(
                "graph chart covers the upper hemisphere only".into(),
            ));
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut rho = 1.0 / norm;
        let mut scaled = vec![0.0; n - 1];
        for _ in 0..60 {
            for i in 0..n - 1 {
                scaled[i] = rho * y[i];
            }
            let jet = self.profile.jet(&scaled)?;
            let f = rho * y[n - 1] - jet.value();
            let fr = y[n - 1] - dot(jet.gradient(), &y[..n - 1]);
            if fr.abs() < 1e-300 {
                return Err(Error::Degenerate("radial ray tangent to the graph".into()));
            }
            let step = f / fr;
            rho -= step;
            if step.abs() <= 1e-15 * rho.abs() {
                for i in 0..n - 1 {
                    scaled[i] = rho * y[i];
                }
                return Ok((rho, self.profile.jet(&scaled)?));
            }
        }
        Err(Error::Solver(
            "Newton iteration for the radial function did not converge".into(),
        ))
    }
}

impl ScalarField for GraphAsRadial {
    fn dim(&self) -> usize {
        self.profile.dim() + 1
    }

    fn jet(&self, y: &[f64]) -> Result<Jet2> {
        let n = y.len();
        let (rho, phi) = self.solve(y)?;
        let yp = &y[..n - 1];
        let g = phi.gradient();
        let fr = y[n - 1] - dot(g, yp);
        let frr = -phi.hessian_bilinear(yp, yp);
        let mut fy = vec![0.0; n];
        let mut fyr = vec![0.0; n];
        for j in 0..n - 1 {
            fy[j] = -rho * g[j];
            fyr[j] = -g[j] - rho * dot(phi.hessian_row(j), yp);
        }
        fy[n - 1] = rho;
        fyr[n - 1] = 1.0;
        let rj: Vec<f64> = fy.iter().map(|f| -f / fr).collect();
        let mut jet = Jet2::zero(n);
        jet.set_value(rho - self.base_radius);
        for i in 0..n {
            jet.set_gradient(i, rj[i]);
            for j in 0..=i {
                let fij = if i < n - 1 && j < n - 1 {
                    -rho * rho * phi.hessian(i, j)
                } else {
                    0.0
                };
                let rij = -(fij + fyr[i] * rj[j] + fyr[j] * rj[i] + frr * rj[i] * rj[j]) / fr;
                jet.set_hessian(i, j, rij);
            }
        }
        Ok(jet)
    }
}

/// A surface sample: point and unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSample {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
}

/// Radial description of a star-shaped sample set: directions `x_i` and
/// offsets `ω_i = |y_i − c| − b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSamples {
    pub center: Vec<f64>,
    pub base_radius: f64,
    pub directions: Vec<Vec<f64>>,
    pub omega: Vec<f64>,
}

impl RadialSamples {
    pub fn max_abs_omega(&self) -> f64 {
        self.omega.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

/// Checks `ν(y)·(y − c) > 0` at every sample and returns the radial
/// offsets; the first violating sample is reported as a witness.
pub fn radial_extraction(
    samples: &[SurfaceSample],
    center: &[f64],
    base_radius: f64,
) -> Result<RadialSamples> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let mut directions = Vec::with_capacity(samples.len());
    let mut omega = Vec::with_capacity(samples.len());
    for s in samples {
        if s.point.len() != center.len() || s.normal.len() != center.len() {
            return Err(Error::Mismatch {
                expected: center.len(),
                got: s.point.len(),
            });
        }
        let rel: Vec<f64> = s.point.iter().zip(center).map(|(p, c)| p - c).collect();
        let dist = rel.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(dot(&s.normal, &rel) > 0.0) || dist == 0.0 {
            return Err(Error::NotStarShaped {
                witness: s.point.clone(),
            });
        }
        directions.push(rel.iter().map(|v| v / dist).collect());
        omega.push(dist - base_radius);
    }
    Ok(RadialSamples {
        center: center.to_vec(),
        base_radius,
        directions,
        omega,
    })
}

/// Circumradius, inradius and their difference about a center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiiGap {
    pub rho_e: f64,
    pub rho_i: f64,
    pub gap: f64,
}

/// `ρ_e = max |y − c|`, `ρ_i = min |y − c|` over the samples.
pub fn radii_gap<'a>(
    samples: impl IntoIterator<Item = &'a [f64]>,
    center: &[f64],
) -> Result<RadiiGap> {
    let mut rho_e = f64::NEG_INFINITY;
    let mut rho_i = f64::INFINITY;
    for p in samples {
        if p.len() != center.len() {
            return Err(Error::Mismatch {
                expected: center.len(),
                got: p.len(),
            });
        }
        let d = p
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        rho_e = rho_e.max(d);
        rho_i = rho_i.min(d);
    }
    if rho_e == f64::NEG_INFINITY {
        return Err(Error::Empty);
    }
    Ok(RadiiGap {
        rho_e,
        rho_i,
        gap: rho_e - rho_i,
    })
}

/// Radii from offsets `|y − c| − b` computed without cancellation; the gap
/// is formed from the offsets directly.
pub fn radii_gap_from_offsets(offsets: &[f64], base_radius: f64) -> Result<RadiiGap> {
    if offsets.is_empty() {
        return Err(Error::Empty);
    }
    let max = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = offsets.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RadiiGap {
        rho_e: base_radius + max,
        rho_i: base_radius + min,
        gap: max - min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic_fields::hemisphere_jet;
    use crate::jet::FnField;
    use crate::quadrature::sphere_rule;
    use proptest::prelude::*;

    fn hemisphere_field(dim: usize) -> Arc<dyn ScalarField> {
        Arc::new(FnField::new(dim, hemisphere_jet))
    }

    /// Radial function of the ellipsoid `Σ y_i²/a_i² = 1`, extended
    /// homogeneously: `W(y) = (Σ y_i²/a_i²)^{−1/2} − b`.
    fn ellipsoid_radial(axes: Vec<f64>, b: f64) -> Arc<dyn ScalarField> {
        let n = axes.len();
        Arc::new(FnField::new(n, move |y: &[f64]| {
            let q: f64 = y.iter().zip(&axes).map(|(y, a)| y * y / (a * a)).sum();
            let u = Jet2::from_parts(
                q,
                &y.iter()
                    .zip(&axes)
                    .map(|(y, a)| 2.0 * y / (a * a))
                    .collect::<Vec<_>>(),
                &(0..n * n)
                    .map(|k| {
                        if k / n == k % n {
                            2.0 / (axes[k / n] * axes[k / n])
                        } else {
                            0.0
                        }
                    })
                    .collect::<Vec<_>>(),
            );
            let r = q.powf(-0.5);
            let mut jet = u.compose((r, -0.5 * r / q, 0.75 * r / (q * q)));
            jet.set_value(r - b);
            Ok(jet)
        }))
    }

    /// Profile of the upper half of the same ellipsoid as a graph over the
    /// first `N − 1` coordinates.
    fn ellipsoid_graph(axes: Vec<f64>) -> Arc<dyn ScalarField> {
        let d = axes.len() - 1;
        Arc::new(FnField::new(d, move |x: &[f64]| {
            let q: f64 = x.iter().zip(&axes).map(|(x, a)| x * x / (a * a)).sum();
            let u = Jet2::from_parts(
                1.0 - q,
                &x.iter()
                    .zip(&axes)
                    .map(|(x, a)| -2.0 * x / (a * a))
                    .collect::<Vec<_>>(),
                &(0..d * d)
                    .map(|k| {
                        if k / d == k % d {
                            -2.0 / (axes[k / d] * axes[k / d])
                        } else {
                            0.0
                        }
                    })
                    .collect::<Vec<_>>(),
            );
            let s = (1.0 - q).sqrt();
            Ok(u.compose((s, 0.5 / s, -0.25 / (s * s * s))).scale(axes[d]))
        }))
    }

    #[test]
    fn area_element_examples() {
        assert_eq!(graph_area_element(&[0.0, 0.0]), 1.0);
        assert!((graph_area_element(&[0.6, 0.8]) - 2f64.sqrt()).abs() < 1e-15);
        let x = [0.3, -0.4, 0.1];
        let jet = hemisphere_jet(&x).unwrap();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        assert!((graph_area_element(jet.gradient()) - 1.0 / (1.0 - r2).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn graph_curvature_of_sphere_and_plane() {
        for n in 2..8 {
            let origin = vec![0.0; n - 1];
            assert!(
                (graph_mean_curvature(&hemisphere_jet(&origin).unwrap(), n) - 1.0).abs() < 1e-15
            );
            for s in [0.1, 0.5, 0.9, 0.99] {
                let x: Vec<f64> = (0..n - 1)
                    .map(|i| s * ((i + 1) as f64).cos() / (n as f64).sqrt())
                    .collect();
                let h = graph_mean_curvature(&hemisphere_jet(&x).unwrap(), n);
                assert!((h - 1.0).abs() < 1e-10, "n={n} s={s}: {h}");
            }
        }
        let plane = Jet2::from_parts(0.3, &[0.5, -2.0], &[0.0; 4]);
        assert_eq!(graph_mean_curvature(&plane, 3), 0.0);
    }

    #[test]
    fn radial_normal_round_spheres() {
        let x = [0.6, 0.0, 0.8];
        assert_eq!(radial_normal(1.0, 0.0, &[0.0; 3], &x).unwrap(), x.to_vec());
        let nu = radial_normal(1.0, 0.25, &[0.0; 3], &x).unwrap();
        for (a, b) in nu.iter().zip(&x) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(radial_normal(0.0, 0.0, &[0.0; 3], &x).is_err());
    }

    #[test]
    fn radial_normal_matches_finite_difference_surface() {
        // ω(x) = ε x₁ in R³; check |ν| = 1 and orthogonality to the
        // tangent vectors of the surface along two sphere curves.
        let eps = 0.2;
        let omega: Arc<dyn ScalarField> = Arc::new(FnField::new(3, move |y: &[f64]| {
            Ok(Jet2::coordinate(y, 0).scale(eps))
        }));
        let s = RadialSurface::new(vec![0.0; 3], 1.0, omega).unwrap();
        let x = [0.48, 0.6, 0.64];
        let nu = s.normal(&x).unwrap();
        assert!((dot(&nu, &nu) - 1.0).abs() < 1e-12);
        assert!(dot(&nu, &x) > 0.0);
        let tangents = [[0.6, -0.48, 0.0], [0.0, 0.64, -0.6]];
        for t in tangents {
            let h = 1e-6;
            let plus: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a + h * b).collect();
            let minus: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a - h * b).collect();
            let unit = |v: Vec<f64>| {
                let n = dot(&v, &v).sqrt();
                v.into_iter().map(|c| c / n).collect::<Vec<_>>()
            };
            let dp: Vec<f64> = s
                .point(&unit(plus))
                .unwrap()
                .iter()
                .zip(s.point(&unit(minus)).unwrap())
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect();
            assert!(dot(&dp, &nu).abs() < 1e-8 * dot(&dp, &dp).sqrt());
        }
    }

    #[test]
    fn radial_curvature_of_spheres() {
        for n in 2..7 {
            let rule = sphere_rule(n, 6).unwrap();
            for (radius, c) in [(1.0, 0.0), (1.0, 0.3), (2.0, -0.5)] {
                let omega = Arc::new(crate::jet::ConstantField { dim: n, value: c });
                let s = RadialSurface::new(vec![0.1; n], radius, omega).unwrap();
                for x in rule.nodes() {
                    let h = s.mean_curvature(x).unwrap();
                    assert!((h - 1.0 / (radius + c)).abs() < 1e-10, "n={n} h={h}");
                }
            }
        }
    }

    #[test]
    fn radial_curvature_rejects_chart_pole() {
        let s = RadialSurface::sphere(vec![0.0; 3], 1.0).unwrap();
        assert!(matches!(
            s.mean_curvature(&[1.0, 0.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn ellipse_curvature_closed_form() {
        // κ = ab / (a² sin²θ + b² cos²θ)^{3/2} at (a cos θ, b sin θ).
        let (a, b) = (1.0, 1.4);
        let s = RadialSurface::new(vec![0.0; 2], 1.0, ellipsoid_radial(vec![a, b], 1.0)).unwrap();
        for k in 0..40 {
            let th = 0.05 + k as f64 * 0.15;
            let (sn, cs) = th.sin_cos();
            let p = [a * cs, b * sn];
            let r = dot(&p, &p).sqrt();
            let x = [p[0] / r, p[1] / r];
            let kappa = a * b / (a * a * sn * sn + b * b * cs * cs).powf(1.5);
            assert!((s.mean_curvature(&x).unwrap() - kappa).abs() < 1e-12);
        }
    }

    #[test]
    fn chart_consistency_ellipsoid() {
        for axes in [
            vec![1.0, 1.2],
            vec![1.0, 1.2, 0.9],
            vec![0.8, 1.1, 1.3, 1.0],
        ] {
            let n = axes.len();
            let radial =
                RadialSurface::new(vec![0.0; n], 1.0, ellipsoid_radial(axes.clone(), 1.0)).unwrap();
            let patch = GraphPatch::new(n, ellipsoid_graph(axes.clone()), 0.7).unwrap();
            let via_graph = RadialSurface::new(
                vec![0.0; n],
                1.0,
                Arc::new(GraphAsRadial::new(ellipsoid_graph(axes.clone()), 1.0)),
            )
            .unwrap();
            for k in 0..10 {
                let x: Vec<f64> = (0..n - 1)
                    .map(|i| 0.05 * (k as f64 + 1.0) * ((i + k) as f64).cos())
                    .collect();
                let p = patch.point(&x).unwrap();
                let r = dot(&p, &p).sqrt();
                let dir: Vec<f64> = p.iter().map(|v| v / r).collect();
                let hg = patch.mean_curvature(&x).unwrap();
                let hr = radial.mean_curvature(&dir).unwrap();
                let ha = via_graph.mean_curvature(&dir).unwrap();
                assert!(
                    (hg - hr).abs() < 1e-9,
                    "axes={axes:?} graph {hg} radial {hr}"
                );
                assert!(
                    (ha - hr).abs() < 1e-9,
                    "axes={axes:?} adapter {ha} radial {hr}"
                );
                let nr = radial.normal(&dir).unwrap();
                let ng = patch.normal(&x).unwrap();
                for (a, b) in nr.iter().zip(&ng) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn chart_consistency_sphere_adapter() {
        for n in 2..7 {
            let s = RadialSurface::new(
                vec![0.0; n],
                1.0,
                Arc::new(GraphAsRadial::new(hemisphere_field(n - 1), 1.0)),
            )
            .unwrap();
            let rule = sphere_rule(n, 6).unwrap();
            for x in rule.nodes().filter(|x| x[n - 1] > 0.2) {
                assert!((s.mean_curvature(x).unwrap() - 1.0).abs() < 1e-10);
                assert!(s.omega().jet(x).unwrap().value().abs() < 1e-14);
            }
        }
    }

    #[test]
    fn extraction_examples() {
        let rule = sphere_rule(3, 8).unwrap();
        let samples: Vec<SurfaceSample> = rule
            .nodes()
            .map(|x| SurfaceSample {
                point: x.to_vec(),
                normal: x.to_vec(),
            })
            .collect();
        let out = radial_extraction(&samples, &[0.0; 3], 1.0).unwrap();
        assert!(out.max_abs_omega() < 1e-15);

        // Torus of radii (2, 1) about the x₃-axis: inner equator normals point
        // towards the origin.
        let mut torus = Vec::new();
        for i in 0..16 {
            for j in 0..8 {
                let (u, v) = (i as f64 * 0.39, j as f64 * 0.785 + 0.1);
                let normal = vec![v.cos() * u.cos(), v.cos() * u.sin(), v.sin()];
                let point = vec![
                    (2.0 + v.cos()) * u.cos(),
                    (2.0 + v.cos()) * u.sin(),
                    v.sin(),
                ];
                torus.push(SurfaceSample { point, normal });
            }
        }
        match radial_extraction(&torus, &[0.0; 3], 1.0) {
            Err(Error::NotStarShaped { witness }) => {
                let rel: f64 = (witness[0] * witness[0] + witness[1] * witness[1]).sqrt();
                assert!(rel < 2.0);
            }
            other => panic!("expected star-shape failure, got {other:?}"),
        }
        assert_eq!(radial_extraction(&[], &[0.0; 3], 1.0), Err(Error::Empty));
    }

    #[test]
    fn radii_examples() {
        let pts = [vec![1.0, 0.0], vec![0.0, 2.0]];
        let g = radii_gap(pts.iter().map(Vec::as_slice), &[0.0, 0.0]).unwrap();
        assert_eq!((g.rho_e, g.rho_i, g.gap), (2.0, 1.0, 1.0));
        let rule = sphere_rule(4, 6).unwrap();
        let g = radii_gap(rule.nodes(), &[0.0; 4]).unwrap();
        assert!(g.gap < 1e-15);
        assert_eq!(radii_gap(std::iter::empty(), &[0.0; 2]), Err(Error::Empty));
        let g = radii_gap_from_offsets(&[1e-12, 0.0, 3e-12], 1.0).unwrap();
        assert_eq!(g.gap, 3e-12);
    }

    proptest! {
        #[test]
        fn refinement_never_shrinks_the_gap(pts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..40), extra in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..10)) {
            let base: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
            let mut refined = base.clone();
            refined.extend(extra.iter().map(|&(a, b)| vec![a, b]));
            let g0 = radii_gap(base.iter().map(Vec::as_slice), &[0.0, 0.0]).unwrap();
            let g1 = radii_gap(refined.iter().map(Vec::as_slice), &[0.0, 0.0]).unwrap();
            prop_assert!(g1.rho_e >= g0.rho_e);
            prop_assert!(g1.rho_i <= g0.rho_i);
            prop_assert!(g1.gap >= 0.0);
        }

        #[test]
        fn radial_normal_is_unit(w in -0.5f64..0.5, g in proptest::collection::vec(-2.0f64..2.0, 4), a in 0.1f64..3.0, b in 0.1f64..3.0) {
            let x = crate::quadrature::hyperspherical_point_vec(&[a, b, 0.7]);
            let tg = tangential_gradient(&g, &x);
            let nu = radial_normal(1.0, w, &tg, &x).unwrap();
            prop_assert!((dot(&nu, &nu).sqrt() - 1.0).abs() < 1e-12);
            if dot(&tg, &tg).sqrt() < 1.0 + w {
                prop_assert!(dot(&nu, &x) > 0.0);
            }
        }
    }
}

//! Quadrature rules on spheres, boxes and balls.
//!
//! All rules are tensor products of one-dimensional Gauss–Legendre or
//! midpoint/trapezoid rules. Nodes are stored flat with stride `dim`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Default cap on the number of nodes a single rule may hold.
pub const DEFAULT_NODE_CAP: usize = 6_000_000;

/// Integration domain of a [`QuadratureRule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Sphere `S^{dim_n − 1}` of the given radius in `R^{dim_n}`.
    Sphere { dim_n: usize, radius: f64 },
    /// Cube `[−half_width, half_width]^dim`.
    Box { dim: usize, half_width: f64 },
    /// Euclidean ball of the given radius in `R^dim`.
    Ball { dim: usize, radius: f64 },
    /// Interval `[a, b]`.
    Interval { a: f64, b: f64 },
}

impl Domain {
    /// Lebesgue (or surface) measure of the domain.
    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Sphere { dim_n, radius } => {
                unit_sphere_measure(dim_n) * radius.powi(dim_n as i32 - 1)
            }
            Domain::Box { dim, half_width } => (2.0 * half_width).powi(dim as i32),
            Domain::Ball { dim, radius } => unit_ball_volume(dim) * radius.powi(dim as i32),
            Domain::Interval { a, b } => b - a,
        }
    }
}

/// `|S^{n−1}|`, the surface measure of the unit sphere in `R^n` (`n ≥ 1`,
/// with `|S^0| = 2`).
pub fn unit_sphere_measure(n: usize) -> f64 {
    assert!(n >= 1, "sphere measure needs n >= 1");
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * unit_sphere_measure(n - 2),
    }
}

/// `|B_1^n|`, the volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    unit_sphere_measure(n) / n as f64
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 - 1.0) * z * p2 - (j as f64 - 1.0) * p3) / j as f64;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss rule for the weight `(1 − u²)^a` on `[−1, 1]` (`a ≥ 0`), computed
/// with the Golub–Welsch eigenvalue method. Nodes ascending.
pub fn gauss_gegenbauer(n: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(
        n >= 1 && a >= 0.0,
        "Gauss-Gegenbauer needs n >= 1 and a >= 0"
    );
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let off = (kf * (kf + 2.0 * a) / (4.0 * (kf + a).powi(2) - 1.0)).sqrt();
        jacobi[(k, k - 1)] = off;
        jacobi[(k - 1, k)] = off;
    }
    // μ₀ = ∫(1 − u²)^a du via μ₀(a + 1) = μ₀(a)(2a + 2)/(2a + 3).
    let mut mu0 = if a.fract() == 0.0 { 2.0 } else { PI / 2.0 };
    let mut b = a.fract();
    while b + 0.5 < a {
        mu0 *= (2.0 * b + 2.0) / (2.0 * b + 3.0);
        b += 1.0;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

/// Gauss–Legendre rule mapped to `[a, b]`. With `grading = Some(q)` the
/// nodes are pulled towards both ends through the sigmoidal map
/// `g(u) = u^q / (u^q + (1 − u)^q)`, which tames integrable endpoint
/// singularities.
pub fn gauss_legendre_on(a: f64, b: f64, n: usize, grading: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let len = b - a;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (xi, wi) in x.iter().zip(&w) {
        let u = 0.5 * (xi + 1.0);
        let wu = 0.5 * wi;
        match grading {
            None => {
                nodes.push(a + len * u);
                weights.push(len * wu);
            }
            Some(q) => {
                let (uq, vq) = (u.powf(q), (1.0 - u).powf(q));
                let d = uq + vq;
                let g = uq / d;
                let dg = q * u.powf(q - 1.0) * (1.0 - u).powf(q - 1.0) / (d * d);
                nodes.push(a + len * g);
                weights.push(len * dg * wu);
            }
        }
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule over consecutive panels `[b_i, b_{i+1}]`.
pub fn composite_gauss_legendre(breaks: &[f64], per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in breaks.windows(2) {
        let (x, w) = gauss_legendre_on(pair[0], pair[1], per_panel, None);
        nodes.extend(x);
        weights.extend(w);
    }
    (nodes, weights)
}

/// Nodes, weights and a domain descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    domain: Domain,
    hyperplane_safe: bool,
    sign_folded: bool,
}

impl QuadratureRule {
    /// Builds a rule from flat node storage; checks lengths and positivity.
    pub fn new(dim: usize, nodes: Vec<f64>, weights: Vec<f64>, domain: Domain) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "rule dimension must be positive".into(),
            ));
        }
        if nodes.len() != weights.len() * dim {
            return Err(Error::Mismatch {
                expected: weights.len() * dim,
                got: nodes.len(),
            });
        }
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        let hyperplane_safe = nodes.iter().all(|&x| x != 0.0);
        Ok(Self {
            dim,
            nodes,
            weights,
            domain,
            hyperplane_safe,
            sign_folded: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// No node has a vanishing coordinate.
    pub fn hyperplane_safe(&self) -> bool {
        self.hyperplane_safe
    }

    /// The rule covers one coordinate orthant with weights multiplied by
    /// `2^dim`; it integrates only functions even in every coordinate.
    pub fn sign_folded(&self) -> bool {
        self.sign_folded
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// Rescales nodes by `s` about the origin (weights by `s^dim`, or
    /// `s^{dim−1}` for sphere rules).
    pub fn scaled(&self, s: f64) -> Self {
        let (domain, wscale) = match self.domain {
            Domain::Sphere { dim_n, radius } => (
                Domain::Sphere {
                    dim_n,
                    radius: radius * s,
                },
                s.powi(dim_n as i32 - 1),
            ),
            Domain::Box { dim, half_width } => (
                Domain::Box {
                    dim,
                    half_width: half_width * s,
                },
                s.powi(dim as i32),
            ),
            Domain::Ball { dim, radius } => (
                Domain::Ball {
                    dim,
                    radius: radius * s,
                },
                s.powi(dim as i32),
            ),
            Domain::Interval { a, b } => (Domain::Interval { a: a * s, b: b * s }, s),
        };
        Self {
            dim: self.dim,
            nodes: self.nodes.iter().map(|x| x * s).collect(),
            weights: self.weights.iter().map(|w| w * wscale).collect(),
            domain,
            hyperplane_safe: self.hyperplane_safe,
            sign_folded: self.sign_folded,
        }
    }
}

/// Iterates over the tensor product of one-dimensional rules.
fn tensor_product(factors: &[(Vec<f64>, Vec<f64>)], mut f: impl FnMut(&[f64], f64)) {
    let d = factors.len();
    if factors.iter().any(|(x, _)| x.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            point[k] = factors[k].0[i];
            w *= factors[k].1[i];
        }
        f(&point, w);
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            idx[k] += 1;
            if idx[k] < factors[k].0.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn check_cap(count: usize, cap: usize) -> Result<()> {
    if count > cap {
        return Err(Error::Resource { count, cap });
    }
    Ok(())
}

/// Unit vector in `R^n` for hyperspherical angles `a` (length `n − 1`):
/// `x_1 = cos a_1`, `x_j = sin a_1 ⋯ sin a_{j−1} cos a_j`,
/// `x_n = sin a_1 ⋯ sin a_{n−1}`.
pub fn hyperspherical_point(angles: &[f64], out: &mut [f64]) {
    let n = angles.len() + 1;
    debug_assert_eq!(out.len(), n);
    let mut prod = 1.0;
    for j in 0..n - 1 {
        out[j] = prod * angles[j].cos();
        prod *= angles[j].sin();
    }
    out[n - 1] = prod;
}

/// Allocating variant of [`hyperspherical_point`].
pub fn hyperspherical_point_vec(angles: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; angles.len() + 1];
    hyperspherical_point(angles, &mut out);
    out
}

/// Surface Jacobian `Π_j sin^{n−1−j} a_j` of [`hyperspherical_point`].
pub fn hyperspherical_jacobian(angles: &[f64]) -> f64 {
    let n = angles.len() + 1;
    let mut jac = 1.0;
    for (j, a) in angles.iter().enumerate().take(n.saturating_sub(2)) {
        jac *= a.sin().powi((n - 2 - j) as i32);
    }
    jac
}

/// Angle factors of a full-sphere rule on `S^{n−1}`.
fn sphere_angle_factors(n: usize, polar: usize, azimuth: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut factors = Vec::with_capacity(n - 1);
    for j in 0..n - 2 {
        // sin^k θ dθ = (1 − u²)^{(k−1)/2} du with u = cos θ.
        let power = (n - 2 - j) as f64;
        let (u, w) = gauss_gegenbauer(polar, 0.5 * (power - 1.0));
        factors.push((u.iter().map(|u| u.acos()).collect(), w));
    }
    let h = 2.0 * PI / azimuth as f64;
    let phi: Vec<f64> = (0..azimuth).map(|i| (i as f64 + 0.5) * h).collect();
    factors.push((phi, vec![h; azimuth]));
    factors
}

/// Tensor-product rule on the unit sphere `S^{N−1} ⊂ R^N`: a Gauss rule in
/// each polar angle `θ` (`max(resolution/2, 2)` nodes, Gauss–Gegenbauer in
/// `cos θ` so the `sin^k θ` Jacobian is integrated exactly) and the midpoint-shifted trapezoid rule in the azimuth
/// (`resolution` nodes).
pub fn sphere_rule(dim_n: usize, resolution: usize) -> Result<QuadratureRule> {
    sphere_rule_capped(dim_n, resolution, DEFAULT_NODE_CAP)
}

pub fn sphere_rule_capped(dim_n: usize, resolution: usize, cap: usize) -> Result<QuadratureRule> {
    if dim_n < 2 {
        return Err(Error::InvalidParameter(format!(
            "sphere rule needs N >= 2, got {dim_n}"
        )));
    }
    if resolution < 4 {
        return Err(Error::InvalidParameter(format!(
            "sphere rule needs resolution >= 4, got {resolution}"
        )));
    }
    let polar = (resolution / 2).max(2);
    let count = polar
        .checked_pow(dim_n as u32 - 2)
        .and_then(|c| c.checked_mul(resolution));
    check_cap(count.unwrap_or(usize::MAX), cap)?;
    let factors = sphere_angle_factors(dim_n, polar, resolution);
    let count = count.unwrap_or(0);
    let mut nodes = Vec::with_capacity(count * dim_n);
    let mut weights = Vec::with_capacity(count);
    let mut x = vec![0.0; dim_n];
    tensor_product(&factors, |a, w| {
        hyperspherical_point(a, &mut x);
        nodes.extend_from_slice(&x);
        weights.push(w);
    });
    QuadratureRule::new(dim_n, nodes, weights, Domain::Sphere { dim_n, radius: 1.0 })
}

/// Tensor rule on `[−t, t]^dim`. With `hyperplane_safe` the rule is the
/// composite midpoint rule with an even number of cells per axis, so every
/// node satisfies `|x_i| ≥ t / resolution`; otherwise a tensor
/// Gauss–Legendre rule with `resolution` nodes per axis.
pub fn scaled_box_rule(
    t: f64,
    dim: usize,
    resolution: usize,
    hyperplane_safe: bool,
) -> Result<QuadratureRule> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "box half-width must be positive, got {t}"
        )));
    }
    if dim == 0 || resolution == 0 {
        return Err(Error::InvalidParameter(
            "box rule needs dim >= 1 and resolution >= 1".into(),
        ));
    }
    let axis = if hyperplane_safe {
        let cells = resolution + resolution % 2;
        let h = 2.0 * t / cells as f64;
        (
            (0..cells).map(|i| -t + (i as f64 + 0.5) * h).collect(),
            vec![h; cells],
        )
    } else {
        gauss_legendre_on(-t, t, resolution, None)
    };
    box_from_axis(axis, dim, Domain::Box { dim, half_width: t })
}

/// Tensor rule on `[−h, h]^dim` from a composite Gauss–Legendre rule with
/// `panels` equal panels of `per_panel` nodes per axis.
pub fn composite_box_rule(
    half_width: f64,
    dim: usize,
    panels: usize,
    per_panel: usize,
) -> Result<QuadratureRule> {
    if !(half_width > 0.0) || dim == 0 || panels == 0 || per_panel == 0 {
        return Err(Error::InvalidParameter("invalid composite box rule".into()));
    }
    let breaks: Vec<f64> = (0..=panels)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / panels as f64)
        .collect();
    let axis = composite_gauss_legendre(&breaks, per_panel);
    box_from_axis(axis, dim, Domain::Box { dim, half_width })
}

fn box_from_axis(axis: (Vec<f64>, Vec<f64>), dim: usize, domain: Domain) -> Result<QuadratureRule> {
    let count = axis.0.len().checked_pow(dim as u32).unwrap_or(usize::MAX);
    check_cap(count, DEFAULT_NODE_CAP)?;
    let factors = vec![axis; dim];
    let mut nodes = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    tensor_product(&factors, |x, w| {
        nodes.extend_from_slice(x);
        weights.push(w);
    });
    QuadratureRule::new(dim, nodes, weights, domain)
}

/// Gauss–Legendre rule on an interval.
pub fn interval_rule(a: f64, b: f64, n: usize) -> Result<QuadratureRule> {
    if !(b > a) || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "invalid interval rule [{a}, {b}] n={n}"
        )));
    }
    let (x, w) = gauss_legendre_on(a, b, n, None);
    QuadratureRule::new(1, x, w, Domain::Interval { a, b })
}

/// Rule on the full ball `B_R ⊂ R^dim`: Gauss–Legendre in the radius
/// (`resolution` nodes, weight `r^{dim−1}`) times [`sphere_rule`] on the unit
/// sphere. For `dim = 1` this is Gauss–Legendre on `[−R, R]`.
pub fn ball_rule(dim: usize, radius: f64, resolution: usize) -> Result<QuadratureRule> {
    if !(radius > 0.0) || dim == 0 {
        return Err(Error::InvalidParameter(
            "ball rule needs dim >= 1 and radius > 0".into(),
        ));
    }
    if dim == 1 {
        let (x, w) = gauss_legendre_on(-radius, radius, resolution.max(1), None);
        return QuadratureRule::new(1, x, w, Domain::Ball { dim: 1, radius });
    }
    let sphere = sphere_rule(dim, resolution)?;
    let (rs, rw) = gauss_legendre_on(0.0, radius, resolution, None);
    let count = sphere.len() * rs.len();
    check_cap(count, DEFAULT_NODE_CAP)?;
    let mut nodes = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    for (r, wr) in rs.iter().zip(&rw) {
        let radial = wr * r.powi(dim as i32 - 1);
        for (x, ws) in sphere.nodes().zip(sphere.weights()) {
            nodes.extend(x.iter().map(|v| v * r));
            weights.push(radial * ws);
        }
    }
    QuadratureRule::new(dim, nodes, weights, Domain::Ball { dim, radius })
}

/// Sign-folded rule on the ball `B_R ⊂ R^dim` built on the positive
/// orthant and weighted by `2^dim`; valid for integrands even in every
/// coordinate. No node lies on a coordinate hyperplane.
///
/// The radius is split into `radial_breaks` (relative to `R`), each panel
/// carrying `radial_per_panel` Gauss–Legendre nodes; each angle uses
/// `resolution` nodes on `(0, π/2)`, graded towards both ends when
/// `grading` is set.
pub fn orthant_ball_rule(
    dim: usize,
    radius: f64,
    resolution: usize,
    radial_breaks: &[f64],
    radial_per_panel: usize,
    grading: Option<f64>,
) -> Result<QuadratureRule> {
    if !(radius > 0.0) || dim == 0 || resolution == 0 || radial_per_panel == 0 {
        return Err(Error::InvalidParameter("invalid orthant ball rule".into()));
    }
    if radial_breaks.len() < 2
        || radial_breaks[0] != 0.0
        || *radial_breaks.last().unwrap() != 1.0
        || radial_breaks.windows(2).any(|p| p[1] <= p[0])
    {
        return Err(Error::InvalidParameter(
            "radial breaks must increase from 0 to 1".into(),
        ));
    }
    let count = resolution
        .checked_pow(dim.saturating_sub(1) as u32)
        .and_then(|c| c.checked_mul((radial_breaks.len() - 1) * radial_per_panel))
        .unwrap_or(usize::MAX);
    check_cap(count, DEFAULT_NODE_CAP)?;
    let mut radial = (Vec::new(), Vec::new());
    for pair in radial_breaks.windows(2) {
        let (x, w) = gauss_legendre_on(pair[0], pair[1], radial_per_panel, None);
        radial.0.extend(x);
        radial.1.extend(w);
    }
    let mut factors = Vec::with_capacity(dim.max(1));
    for j in 0..dim.saturating_sub(1) {
        let (x, mut w) = gauss_legendre_on(0.0, PI / 2.0, resolution, grading);
        if dim >= 2 && j + 2 < dim {
            let power = (dim - 2 - j) as i32;
            for (wi, xi) in w.iter_mut().zip(&x) {
                *wi *= xi.sin().powi(power);
            }
        }
        factors.push((x, w));
    }
    let per_shell = factors.iter().map(|f| f.0.len()).product::<usize>();
    let fold = 2f64.powi(dim as i32);
    let scale = radius.powi(dim as i32);
    let mut nodes = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    let mut dir = vec![0.0; dim];
    let mut shell = Vec::with_capacity(per_shell);
    if dim == 1 {
        shell.push((vec![1.0], 1.0));
    } else {
        tensor_product(&factors, |a, w| {
            hyperspherical_point(a, &mut dir);
            shell.push((dir.clone(), w));
        });
    }
    for (r, wr) in radial.0.iter().zip(&radial.1) {
        let rw = wr * r.powi(dim as i32 - 1) * scale * fold;
        for (d, ws) in &shell {
            nodes.extend(d.iter().map(|v| v * r * radius));
            weights.push(rw * ws);
        }
    }
    let mut rule = QuadratureRule::new(dim, nodes, weights, Domain::Ball { dim, radius })?;
    rule.sign_folded = true;
    Ok(rule)
}

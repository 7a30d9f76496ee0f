//! Stereographic projection from the north pole, the round metric and its
//! Christoffel symbols in the projected coordinates, covariant derivative
//! norms, and the `W^{2,p}` norm transfer between `S^{N−1}` and a flat ball.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::jet::{Jet2, ScalarField};
use crate::quadrature::{ball_rule, sphere_rule, QuadratureRule};

/// Chart of `S^{N−1} \ {P}`, `P = (0, …, 0, 1)`, together with the radius
/// `R = 1/(8(N−1)²)` of the flat ball used by the norm transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereChart {
    dim_n: usize,
    transfer_radius: f64,
}

impl SphereChart {
    pub fn new(dim_n: usize) -> Result<Self> {
        if dim_n < 2 {
            return Err(Error::InvalidParameter(format!(
                "N must be >= 2, got {dim_n}"
            )));
        }
        let m = (dim_n - 1) as f64;
        Ok(Self {
            dim_n,
            transfer_radius: 1.0 / (8.0 * m * m),
        })
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn transfer_radius(&self) -> f64 {
        self.transfer_radius
    }

    /// `3 · 2^{(N+5)/p + 5/2}`.
    pub fn transfer_constant(&self, p: f64) -> f64 {
        3.0 * 2f64.powf((self.dim_n as f64 + 5.0) / p + 2.5)
    }
}

/// `ι(x) = (x₁, …, x_{N−1}) / (1 − x_N)`.
pub fn stereo_project(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "need a point of R^N with N >= 2".into(),
        ));
    }
    let den = 1.0 - x[n - 1];
    if den.abs() < 1e-14 {
        return Err(Error::Domain(
            "the north pole has no stereographic image".into(),
        ));
    }
    Ok(x[..n - 1].iter().map(|v| v / den).collect())
}

/// `ι^{−1}(y) = (2y, |y|² − 1) / (|y|² + 1)`.
pub fn stereo_inverse(y: &[f64]) -> Vec<f64> {
    let s = y.iter().map(|v| v * v).sum::<f64>() + 1.0;
    let mut x: Vec<f64> = y.iter().map(|v| 2.0 * v / s).collect();
    x.push((s - 2.0) / s);
    x
}

fn conformal_factor(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>() + 1.0
}

/// `g_ij = 4/(|y|²+1)² δ_ij` and its inverse.
pub fn metric_at(y: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let s = conformal_factor(y);
    let d = y.len();
    (
        DMatrix::from_diagonal_element(d, d, 4.0 / (s * s)),
        DMatrix::from_diagonal_element(d, d, s * s / 4.0),
    )
}

/// Christoffel symbols `Γ^k_ij = −2(y_j δ_ik + y_i δ_jk − y_k δ_ij)/(|y|²+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^k_ij`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn christoffel_at(y: &[f64]) -> Christoffel {
    let d = y.len();
    let c = -2.0 / conformal_factor(y);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut data = vec![0.0; d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                data[(k * d + i) * d + j] =
                    c * (y[j] * delta(i, k) + y[i] * delta(j, k) - y[k] * delta(i, j));
            }
        }
    }
    Christoffel { dim: d, data }
}

/// `(|∇_S v|², |D²_S v|²)` from the chart jet of `v` at `y`.
pub fn covariant_norms(jet: &Jet2, y: &[f64]) -> (f64, f64) {
    let d = y.len();
    let s = conformal_factor(y);
    let ginv = s * s / 4.0;
    let grad = jet.gradient();
    let gamma = christoffel_at(y);
    let mut hess_sq = 0.0;
    for i in 0..d {
        for j in 0..d {
            let corr: f64 = (0..d).map(|k| gamma.get(k, i, j) * grad[k]).sum();
            let h = jet.hessian(i, j) - corr;
            hess_sq += h * h;
        }
    }
    (ginv * jet.gradient_norm_sq(), ginv * ginv * hess_sq)
}

/// `|D²_S v|² + |∇_S v|² − ((|y|²+1)⁴/32)|D²v|² − ((|y|²+1)²/8)|∇v|²`;
/// nonnegative for `|y| ≤ 1/(8(N−1)²)`.
pub fn pointwise_derivative_slack(jet: &Jet2, y: &[f64]) -> f64 {
    let s = conformal_factor(y);
    let (g2, h2) = covariant_norms(jet, y);
    let flat_h = jet.hessian_frobenius();
    h2 + g2 - s.powi(4) / 32.0 * flat_h * flat_h - s * s / 8.0 * jet.gradient_norm_sq()
}

/// 2-jet of `v ∘ ι^{−1}` at `y` for an ambient field `v` on `R^N`; only the
/// restriction of `v` to the sphere matters.
pub fn chart_jet(field: &dyn ScalarField, y: &[f64]) -> Result<Jet2> {
    let d = y.len();
    if field.dim() != d + 1 {
        return Err(Error::Mismatch {
            expected: d + 1,
            got: field.dim(),
        });
    }
    let mut s = Jet2::constant(d, 1.0);
    for i in 0..d {
        let yi = Jet2::coordinate(y, i);
        s = s.add(&yi.mul(&yi));
    }
    let sv = s.value();
    let inv = s.compose((1.0 / sv, -1.0 / (sv * sv), 2.0 / (sv * sv * sv)));
    let mut comps: Vec<Jet2> = (0..d)
        .map(|i| Jet2::coordinate(y, i).mul(&inv).scale(2.0))
        .collect();
    comps.push(Jet2::constant(d, 1.0).sub(&inv.scale(2.0)));
    let x: Vec<f64> = comps.iter().map(Jet2::value).collect();
    let outer = field.jet(&x)?;
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    for i in 0..d {
        grad[i] = (0..=d)
            .map(|a| outer.gradient()[a] * comps[a].gradient()[i])
            .sum();
        for j in 0..d {
            let mut h = 0.0;
            for a in 0..=d {
                h += outer.gradient()[a] * comps[a].hessian(i, j);
                for b in 0..=d {
                    h += outer.hessian(a, b) * comps[a].gradient()[i] * comps[b].gradient()[j];
                }
            }
            hess[i * d + j] = h;
        }
    }
    Ok(Jet2::from_parts(outer.value(), &grad, &hess))
}

/// Reflection `x_N ↦ −x_N`, an isometry of the sphere exchanging the poles.
struct Reflected<'a>(&'a dyn ScalarField);

impl ScalarField for Reflected<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn jet(&self, x: &[f64]) -> Result<Jet2> {
        let n = x.len();
        let mut z = x.to_vec();
        z[n - 1] = -z[n - 1];
        let j = self.0.jet(&z)?;
        let mut grad = j.gradient().to_vec();
        grad[n - 1] = -grad[n - 1];
        let mut hess = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let sign = if (a == n - 1) != (b == n - 1) {
                    -1.0
                } else {
                    1.0
                };
                hess[a * n + b] = sign * j.hessian(a, b);
            }
        }
        Ok(Jet2::from_parts(j.value(), &grad, &hess))
    }
}

/// `(v, |∇_S v|, |D²_S v|)` at a point of the sphere. Points of the upper
/// hemisphere are evaluated through the reflected field in the chart of the
/// south hemisphere, keeping the chart coordinates in the unit ball.
pub fn sphere_derivatives(field: &dyn ScalarField, x: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    let reflected = Reflected(field);
    let (f, z): (&dyn ScalarField, Vec<f64>) = if x[n - 1] > 0.0 {
        let mut z = x.to_vec();
        z[n - 1] = -z[n - 1];
        (&reflected, z)
    } else {
        (field, x.to_vec())
    };
    let y = stereo_project(&z)?;
    let jet = chart_jet(f, &y)?;
    let (g2, h2) = covariant_norms(&jet, &y);
    Ok((jet.value(), g2.sqrt(), h2.sqrt()))
}

/// `(∫_S |v|^p + |∇_S v|^p + |D²_S v|^p)^{1/p}` over a rule on `S^{N−1}`.
pub fn sphere_w2p_norm(field: &dyn ScalarField, p: f64, rule: &QuadratureRule) -> Result<f64> {
    let mut acc = 0.0;
    for (x, w) in rule.nodes().zip(rule.weights()) {
        let (v, g, h) = sphere_derivatives(field, x)?;
        acc += w * (v.abs().powf(p) + g.powf(p) + h.powf(p));
    }
    Ok(acc.powf(1.0 / p))
}

/// `(∫_{B_R} |v|^p + |∇v|^p + |D²v|^p dy)^{1/p}` for `v ∘ ι^{−1}` over a
/// rule on the flat ball.
pub fn flat_w2p_norm(field: &dyn ScalarField, p: f64, rule: &QuadratureRule) -> Result<f64> {
    let mut acc = 0.0;
    for (y, w) in rule.nodes().zip(rule.weights()) {
        let jet = chart_jet(field, y)?;
        acc += w
            * (jet.value().abs().powf(p)
                + jet.gradient_norm().powf(p)
                + jet.hessian_frobenius().powf(p));
    }
    Ok(acc.powf(1.0 / p))
}

/// Quadrature rules on `B_R^{N−1}` and `S^{N−1}` for the transfer ratio.
#[derive(Debug, Clone)]
pub struct TransferRules {
    pub flat: QuadratureRule,
    pub sphere: QuadratureRule,
}

impl TransferRules {
    pub fn new(chart: &SphereChart, resolution: usize) -> Result<Self> {
        Ok(Self {
            flat: ball_rule(chart.dim_n - 1, chart.transfer_radius, resolution)?,
            sphere: sphere_rule(chart.dim_n, resolution)?,
        })
    }
}

/// `‖v ∘ ι^{−1}‖_{W^{2,p}(B_R)} / ‖v‖_{W^{2,p}(S^{N−1})}`.
pub fn sobolev_transfer_ratio(
    field: &dyn ScalarField,
    p: f64,
    chart: &SphereChart,
    rules: &TransferRules,
) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [1, inf), got {p}"
        )));
    }
    if field.dim() != chart.dim_n {
        return Err(Error::Mismatch {
            expected: chart.dim_n,
            got: field.dim(),
        });
    }
    let sphere = sphere_w2p_norm(field, p, &rules.sphere)?;
    if sphere == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(flat_w2p_norm(field, p, &rules.flat)? / sphere)
}

/// Polynomial `Σ c_e x^e` on `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialField {
    dim: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl PolynomialField {
    pub fn new(dim: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        if terms.iter().any(|(_, e)| e.len() != dim) {
            return Err(Error::InvalidParameter(
                "exponent vectors must have length dim".into(),
            ));
        }
        Ok(Self { dim, terms })
    }

    /// The coordinate function `x_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self {
            dim,
            terms: vec![(1.0, e)],
        }
    }

    /// All monomials of total degree `≤ degree` with coefficients uniform
    /// in `[−1, 1]`.
    pub fn random(dim: usize, degree: u32, rng: &mut impl Rng) -> Self {
        let mut terms = Vec::new();
        let mut e = vec![0u32; dim];
        loop {
            if e.iter().sum::<u32>() <= degree {
                terms.push((rng.gen_range(-1.0..=1.0), e.clone()));
            }
            let mut i = 0;
            loop {
                if i == dim {
                    return Self { dim, terms };
                }
                e[i] += 1;
                if e[i] <= degree {
                    break;
                }
                e[i] = 0;
                i += 1;
            }
        }
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }
}

/// Derivative of the monomial `x^e`, one order per entry `(i, 1)` of `lower`.
fn monomial(x: &[f64], e: &[u32], lower: &[(usize, u32)]) -> f64 {
    let mut coef = 1.0;
    let mut val = 1.0;
    for (i, (&xi, &ei)) in x.iter().zip(e).enumerate() {
        let by: u32 = lower.iter().filter(|(j, _)| *j == i).map(|(_, b)| b).sum();
        if by > ei {
            return 0.0;
        }
        for k in 0..by {
            coef *= (ei - k) as f64;
        }
        val *= xi.powi((ei - by) as i32);
    }
    coef * val
}

impl ScalarField for PolynomialField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64]) -> Result<Jet2> {
        if x.len() != self.dim {
            return Err(Error::Mismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let d = self.dim;
        let mut value = 0.0;
        let mut grad = vec![0.0; d];
        let mut hess = vec![0.0; d * d];
        for (c, e) in &self.terms {
            value += c * monomial(x, e, &[]);
            for i in 0..d {
                grad[i] += c * monomial(x, e, &[(i, 1)]);
                for j in 0..d {
                    hess[i * d + j] += c * monomial(x, e, &[(i, 1), (j, 1)]);
                }
            }
        }
        Ok(Jet2::from_parts(value, &grad, &hess))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::ConstantField;
    use crate::quadrature::{unit_ball_volume, unit_sphere_measure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if r > 0.1 && r < 1.0 {
                return v.iter().map(|a| a / r).collect();
            }
        }
    }

    #[test]
    fn projection_examples_and_round_trip() {
        assert_eq!(stereo_project(&[0.0, 0.0, -1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(stereo_project(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(
            stereo_project(&[0.0, 0.0, 1.0]),
            Err(Error::Domain(_))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..7 {
            for _ in 0..200 {
                let x = random_unit(n, &mut rng);
                if x[n - 1] > 0.99 {
                    continue;
                }
                let back = stereo_inverse(&stereo_project(&x).unwrap());
                let err = x
                    .iter()
                    .zip(&back)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(err <= 1e-12);
                let norm = back.iter().map(|a| a * a).sum::<f64>();
                assert!((norm - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn metric_values_and_pullback() {
        let (g, gi) = metric_at(&[0.0, 0.0]);
        assert_eq!(g, DMatrix::from_diagonal_element(2, 2, 4.0));
        assert!(((&g * &gi) - DMatrix::identity(2, 2)).abs().max() < 1e-14);
        let (g, gi) = metric_at(&[0.6, 0.8]);
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15 && g[(0, 1)] == 0.0);
        assert!(((&g * &gi) - DMatrix::identity(2, 2)).abs().max() < 1e-14);
        let y = [0.3, -0.7, 0.2];
        let (g, _) = metric_at(&y);
        let h = 1e-6;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|i| {
                let (mut yp, mut ym) = (y, y);
                yp[i] += h;
                ym[i] -= h;
                let (a, b) = (stereo_inverse(&yp), stereo_inverse(&ym));
                a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * h)).collect()
            })
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                assert!((dot - g[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn christoffel_symmetry_bound_and_compatibility() {
        assert_eq!(christoffel_at(&[0.0, 0.0]).max_abs(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let r = y.iter().map(|a| a * a).sum::<f64>().sqrt();
            let c = christoffel_at(&y);
            assert!(c.max_abs() <= 2.0 * r / (r * r + 1.0) + 1e-15);
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        assert_eq!(c.get(k, i, j), c.get(k, j, i));
                    }
                }
            }
            // Γ^k_ij = ½ g^{kk}(∂_j g_ik + ∂_i g_jk − ∂_k g_ij) by finite differences.
            let h = 1e-6;
            let dg = |m: usize| {
                let (mut yp, mut ym) = (y.clone(), y.clone());
                yp[m] += h;
                ym[m] -= h;
                (metric_at(&yp).0[(0, 0)] - metric_at(&ym).0[(0, 0)]) / (2.0 * h)
            };
            let ginv = metric_at(&y).1[(0, 0)];
            let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let fd = 0.5
                            * ginv
                            * (dg(j) * delta(i, k) + dg(i) * delta(j, k) - dg(k) * delta(i, j));
                        assert!((fd - c.get(k, i, j)).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn covariant_norm_examples() {
        let c = Jet2::constant(2, 3.0);
        assert_eq!(covariant_norms(&c, &[0.4, 0.1]), (0.0, 0.0));
        let lin = Jet2::from_parts(0.0, &[1.0, -2.0], &[0.0; 4]);
        // g = 4I at the origin, so chart gradients shrink by a factor 2.
        let (g2, _) = covariant_norms(&lin, &[0.0, 0.0]);
        assert!((g2 - 5.0 / 4.0).abs() < 1e-14);
        let y = [0.5, 0.25];
        let (g2, h2) = covariant_norms(&lin, &y);
        let s: f64 = 1.3125;
        assert!((g2 - s * s / 4.0 * 5.0).abs() < 1e-13);
        assert!(h2 >= 0.0);
    }

    #[test]
    fn covariant_hessian_of_restricted_linear_function() {
        // On the unit sphere D²_S x_N = −x_N g, so |D²_S x_N|² = (N−1) x_N².
        let n = 4;
        let f = PolynomialField::coordinate(n, n - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let y: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let x = stereo_inverse(&y);
            let jet = chart_jet(&f, &y).unwrap();
            let (g2, h2) = covariant_norms(&jet, &y);
            assert!((h2 - (n - 1) as f64 * x[n - 1] * x[n - 1]).abs() < 1e-12);
            assert!((g2 - (1.0 - x[n - 1] * x[n - 1])).abs() < 1e-12);
        }
    }

    #[test]
    fn reflected_evaluation_agrees_with_direct_chart() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = PolynomialField::random(3, 3, &mut rng);
        for _ in 0..30 {
            let x = random_unit(3, &mut rng);
            if x[2] <= 0.05 || x[2] > 0.9 {
                continue;
            }
            let (v, g, h) = sphere_derivatives(&f, &x).unwrap();
            let y = stereo_project(&x).unwrap();
            let jet = chart_jet(&f, &y).unwrap();
            let (g2, h2) = covariant_norms(&jet, &y);
            assert!((v - jet.value()).abs() < 1e-12);
            assert!((g - g2.sqrt()).abs() < 1e-9 * (1.0 + g));
            assert!((h - h2.sqrt()).abs() < 1e-9 * (1.0 + h));
        }
    }

    #[test]
    fn polynomial_jet() {
        let f = PolynomialField::new(
            2,
            vec![(2.0, vec![2, 1]), (-1.0, vec![0, 3]), (0.5, vec![0, 0])],
        )
        .unwrap();
        let j = f.jet(&[1.5, -2.0]).unwrap();
        assert!((j.value() - (2.0 * 2.25 * -2.0 + 8.0 + 0.5)).abs() < 1e-14);
        assert!((j.gradient()[0] - 4.0 * 1.5 * -2.0).abs() < 1e-14);
        assert!((j.gradient()[1] - (2.0 * 2.25 - 3.0 * 4.0)).abs() < 1e-14);
        assert!((j.hessian(0, 0) - 4.0 * -2.0).abs() < 1e-14);
        assert!((j.hessian(0, 1) - 4.0 * 1.5).abs() < 1e-14);
        assert!((j.hessian(1, 1) - -6.0 * -2.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(PolynomialField::random(3, 3, &mut rng).terms().len(), 20);
    }

    #[test]
    fn constant_transfer_ratio_closed_form() {
        for (n, p) in [(3, 2.0), (4, 3.0)] {
            let chart = SphereChart::new(n).unwrap();
            let rules = TransferRules::new(&chart, 10).unwrap();
            let r =
                sobolev_transfer_ratio(&ConstantField { dim: n, value: 2.0 }, p, &chart, &rules)
                    .unwrap();
            let rr = chart.transfer_radius();
            let exact = (unit_ball_volume(n - 1) * rr.powi(n as i32 - 1) / unit_sphere_measure(n))
                .powf(1.0 / p);
            assert!((r - exact).abs() < 1e-12 * exact);
            assert!(r < chart.transfer_constant(p));
        }
    }

    #[test]
    fn sphere_norm_of_coordinate_function() {
        // N = 3, p = 2, v = x₁: ∫ x₁² = 4π/3, ∫ |∇_S x₁|² = 8π/3, ∫ |D²_S x₁|² = 2·4π/3.
        // For p = 2 the norm is the square root of the sum, 20π/3.
        let f = PolynomialField::coordinate(3, 0);
        let rule = sphere_rule(3, 16).unwrap();
        let norm = sphere_w2p_norm(&f, 2.0, &rule).unwrap();
        let exact = (20.0 * std::f64::consts::PI / 3.0).sqrt();
        assert!((norm - exact).abs() < 1e-10, "{norm} vs {exact}");
    }

    #[test]
    fn pointwise_inequality_inside_transfer_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [3, 4] {
            let chart = SphereChart::new(n).unwrap();
            let rule = ball_rule(n - 1, chart.transfer_radius(), 8).unwrap();
            for _ in 0..10 {
                let f = PolynomialField::random(n, 3, &mut rng);
                for y in rule.nodes() {
                    let jet = chart_jet(&f, y).unwrap();
                    assert!(pointwise_derivative_slack(&jet, y) >= -1e-10);
                }
            }
        }
    }
}

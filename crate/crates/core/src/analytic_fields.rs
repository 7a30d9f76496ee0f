//! Closed-form scalar fields of the perturbed-sphere construction.
//!
//! The profile of the perturbed cap is
//!
//! ```text
//! φ_t(x) = φ_0(x) + ψ_t(x) · Σ_i |x_i|^{k+α},   φ_0(x) = √(1 − |x|²),
//! ```
//!
//! where `ψ_t(x) = η(|x|/t)` is a smooth radial cutoff equal to one on
//! `B_{t/2}` and vanishing outside `B_t`. Every field is returned as a
//! [`Jet2`] assembled analytically with the product and chain rules.

use crate::error::{Error, Result};
use crate::jet::Jet2;

/// `sup |∇ψ|` for the unit-scale cutoff (`|∇ψ_t| ≤ BUMP_GRAD_BOUND / t`).
///
/// Attained at `|x| = 3/4`, where the smooth step has slope 2 in its own
/// variable and the variable is stretched by a factor 2.
pub const BUMP_GRAD_BOUND: f64 = 4.0;

/// `sup |D²ψ|` (spectral norm) for the unit-scale cutoff
/// (`|D²ψ_t| ≤ BUMP_HESS_BOUND / t²`). Measured on a fine radial grid and
/// rounded up in the fourth digit.
pub const BUMP_HESS_BOUND: f64 = 39.37;

/// `f(s) = exp(−1/s)` for `s > 0`, extended by zero, with two derivatives.
fn smooth_atom(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f = (-1.0 / s).exp();
    if f == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let inv = 1.0 / s;
    let inv2 = inv * inv;
    (f, f * inv2, f * (inv2 * inv2 - 2.0 * inv2 * inv))
}

/// Smooth step `S(s) = f(s) / (f(s) + f(1 − s))` on `[0, 1]` with its first
/// two derivatives. `S ≡ 0` for `s ≤ 0` and `S ≡ 1` for `s ≥ 1`.
pub fn smooth_step(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if s >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, a1, a2) = smooth_atom(s);
    let (b, b1m, b2) = smooth_atom(1.0 - s);
    let b1 = -b1m;
    let d = a + b;
    let d1 = a1 + b1;
    let d2 = a2 + b2;
    let num1 = a1 * d - a * d1;
    let s0 = a / d;
    let s1 = num1 / (d * d);
    let s2 = (a2 * d - a * d2) / (d * d) - 2.0 * d1 * num1 / (d * d * d);
    (s0, s1, s2)
}

/// Radial cutoff profile `η(ρ)`: one on `[0, 1/2]`, zero on `[1, ∞)`, and
/// `S(2(1 − ρ))` in between. Returns `(η, η', η'')`.
pub fn bump_profile(rho: f64) -> (f64, f64, f64) {
    if rho <= 0.5 {
        return (1.0, 0.0, 0.0);
    }
    if rho >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let (s0, s1, s2) = smooth_step(2.0 * (1.0 - rho));
    (s0, -2.0 * s1, 4.0 * s2)
}

/// Jet of the upper unit hemisphere `φ_0(x) = √(1 − |x|²)`.
pub fn hemisphere_jet(x: &[f64]) -> Result<Jet2> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        return Err(Error::Domain(format!(
            "hemisphere profile needs |x| < 1, got |x|² = {r2}"
        )));
    }
    let phi = (1.0 - r2).sqrt();
    let inv = 1.0 / phi;
    let inv3 = inv * inv * inv;
    let mut jet = Jet2::zero(x.len());
    jet.set_value(phi);
    for i in 0..x.len() {
        jet.set_gradient(i, -x[i] * inv);
        for j in 0..=i {
            let delta = if i == j { inv } else { 0.0 };
            jet.set_hessian(i, j, -delta - x[i] * x[j] * inv3);
        }
    }
    Ok(jet)
}

/// Jet of the scaled cutoff `ψ_t(x) = η(|x|/t)`.
pub fn bump_jet(x: &[f64], t: f64) -> Result<Jet2> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cutoff scale must be positive, got {t}"
        )));
    }
    let dim = x.len();
    let u = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rho = u / t;
    if rho <= 0.5 {
        return Ok(Jet2::constant(dim, 1.0));
    }
    if rho >= 1.0 {
        return Ok(Jet2::zero(dim));
    }
    let (e0, e1, e2) = bump_profile(rho);
    let d1 = e1 / t;
    let d2 = e2 / (t * t);
    let mut jet = Jet2::zero(dim);
    jet.set_value(e0);
    for i in 0..dim {
        let ni = x[i] / u;
        jet.set_gradient(i, d1 * ni);
        for j in 0..=i {
            let nj = x[j] / u;
            let delta = if i == j { 1.0 } else { 0.0 };
            jet.set_hessian(i, j, d2 * ni * nj + d1 / u * (delta - ni * nj));
        }
    }
    Ok(jet)
}

/// Jet of `P(x) = Σ_i |x_i|^{k+α}`.
///
/// When `k + α < 2` the second derivative blows up on the coordinate
/// hyperplanes and those points are rejected.
pub fn perturbation_jet(x: &[f64], k: u32, alpha: f64) -> Result<Jet2> {
    let p = k as f64 + alpha;
    let mut jet = Jet2::zero(x.len());
    let mut value = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let a = xi.abs();
        if a == 0.0 && p < 2.0 {
            return Err(Error::SingularPoint {
                index: i,
                exponent: p,
            });
        }
        value += a.powf(p);
        jet.set_gradient(i, p * xi.signum() * a.powf(p - 1.0));
        jet.set_hessian(i, i, p * (p - 1.0) * a.powf(p - 2.0));
    }
    jet.set_value(value);
    Ok(jet)
}

/// Parameters of one member `Ω_t` of the optimality family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub dim_n: usize,
    pub k: u32,
    pub alpha: f64,
    pub t: f64,
}

impl FamilyParams {
    /// Validates `N ≥ 2`, `k ≥ 1`, `α ∈ (0, 1]` and `0 < t ≤ t₁`.
    pub fn new(dim_n: usize, k: u32, alpha: f64, t: f64) -> Result<Self> {
        if !(2..=crate::jet::MAX_DIM).contains(&dim_n) {
            return Err(Error::InvalidParameter(format!(
                "ambient dimension must lie in [2, {}], got {dim_n}",
                crate::jet::MAX_DIM
            )));
        }
        if k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        let t1 = Self::max_scale(dim_n, k);
        if !(t > 0.0 && t <= t1 * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "t must lie in (0, t1 = {t1}], got {t}"
            )));
        }
        Ok(Self { dim_n, k, alpha, t })
    }

    /// `t₁ = 1 / (10 (N − 1)(k + 1))`.
    pub fn max_scale(dim_n: usize, k: u32) -> f64 {
        1.0 / (10.0 * (dim_n as f64 - 1.0) * (k as f64 + 1.0))
    }

    pub fn t1(&self) -> f64 {
        Self::max_scale(self.dim_n, self.k)
    }

    /// Regularity index `k + α`.
    pub fn order(&self) -> f64 {
        self.k as f64 + self.alpha
    }

    /// Dimension of the flat chart, `N − 1`.
    pub fn chart_dim(&self) -> usize {
        self.dim_n - 1
    }

    pub fn with_t(&self, t: f64) -> Result<Self> {
        Self::new(self.dim_n, self.k, self.alpha, t)
    }

    /// True when the second derivatives of the perturbation are unbounded
    /// (`k + α < 2`).
    pub fn is_singular(&self) -> bool {
        self.order() < 2.0
    }

    /// Admissibility of the singular construction for `L^r` deviations:
    /// `k = 1` and `α ∈ ((r − 1)/r, 1)`.
    pub fn check_singular(&self, r: f64) -> Result<()> {
        if self.k != 1 {
            return Err(Error::InvalidParameter(format!(
                "singular mode requires k = 1, got k = {}",
                self.k
            )));
        }
        let lower = (r - 1.0) / r;
        if !(self.alpha > lower && self.alpha < 1.0) {
            return Err(Error::Integrability(format!(
                "singular mode needs alpha in ({lower}, 1) for r = {r}, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Jet of the perturbation `Ψ_t = ψ_t · Σ|x_i|^{k+α}`; identically zero for
/// `|x| ≥ t`.
pub fn perturbation_part_jet(x: &[f64], params: &FamilyParams) -> Result<Jet2> {
    let dim = x.len();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 >= params.t * params.t {
        return Ok(Jet2::zero(dim));
    }
    let bump = bump_jet(x, params.t)?;
    let poly = perturbation_jet(x, params.k, params.alpha)?;
    Ok(bump.mul(&poly))
}

/// Value of `Ψ_t` alone; unlike the jet it is defined on the coordinate
/// hyperplanes for every exponent.
pub fn perturbation_part_value(x: &[f64], params: &FamilyParams) -> f64 {
    let u = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if u >= params.t {
        return 0.0;
    }
    let p = params.order();
    bump_profile(u / params.t).0 * x.iter().map(|v| v.abs().powf(p)).sum::<f64>()
}

/// Jet of the full profile `φ_t = φ_0 + Ψ_t`.
pub fn family_profile_jet(x: &[f64], params: &FamilyParams) -> Result<Jet2> {
    let base = hemisphere_jet(x)?;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 >= params.t * params.t {
        return Ok(base);
    }
    Ok(base.add(&perturbation_part_jet(x, params)?))
}

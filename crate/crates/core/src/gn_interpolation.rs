//! Gagliardo–Nirenberg interpolation: the scale-balanced exponent `θ`, the
//! ratio `‖v‖_∞ / (‖v‖_{W^{s,p}}^{1−θ} ‖v‖_{L^q}^θ)`, dilation checks of the
//! balance, and interpolation in the order of smoothness.

use crate::error::{Error, Result};
use crate::experiment::fit_loglog;
use crate::jet::{Jet2, ScalarField};
use crate::norms::{derivative_norm, lr_norm, NormSpec};
use crate::quadrature::{composite_box_rule, Domain, QuadratureRule};

/// Parameters `(s, p, q, N)` of a Gagliardo–Nirenberg inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnSpec {
    s: f64,
    p: f64,
    q: f64,
    dim: usize,
}

impl GnSpec {
    /// Requires `s > 0`, `p ∈ (1, ∞]`, `q ∈ [1, p]` and `sp > N` for finite `p`.
    pub fn new(s: f64, p: f64, q: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Hypothesis("dimension must be >= 1".into()));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Hypothesis(format!("s must be positive, got {s}")));
        }
        if !(p > 1.0) {
            return Err(Error::Hypothesis(format!("p must exceed 1, got {p}")));
        }
        if !(q >= 1.0 && q <= p && q.is_finite()) {
            return Err(Error::Hypothesis(format!(
                "q must lie in [1, p], got q={q}, p={p}"
            )));
        }
        if p.is_finite() && !(s * p > dim as f64) {
            return Err(Error::Hypothesis(format!(
                "need s p > N, got s={s}, p={p}, N={dim}"
            )));
        }
        Ok(Self { s, p, q, dim })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `s − N/p` (the `N/p` term vanishes for `p = ∞`).
    fn excess(&self) -> f64 {
        if self.p.is_infinite() {
            self.s
        } else {
            self.s - self.dim as f64 / self.p
        }
    }

    fn norm_spec(&self) -> Result<NormSpec> {
        NormSpec::for_order(self.s, self.p)
    }
}

/// `θ = (s − N/p) / (s − N/p + N/q)`.
pub fn gn_exponent(spec: &GnSpec) -> f64 {
    let a = spec.excess();
    a / (a + spec.dim as f64 / spec.q)
}

/// The exponent for the choice `q = rN/(N − 2r)`:
/// `θ = (s − N/p) / (s − N/p + (N − 2r)/r)`.
pub fn gn_exponent_for_curvature(s: f64, p: f64, dim: usize, r: f64) -> Result<f64> {
    let nf = dim as f64;
    if !(r > 0.0 && 2.0 * r < nf) {
        return Err(Error::Hypothesis(format!(
            "need 0 < 2r < N, got r={r}, N={dim}"
        )));
    }
    let q = r * nf / (nf - 2.0 * r);
    let p_eff = if p.is_finite() { p.max(q) } else { p };
    let spec = GnSpec::new(s, p_eff, q, dim)?;
    if p.is_finite() && p < q {
        return Err(Error::Hypothesis(format!(
            "q = rN/(N-2r) = {q} exceeds p = {p}"
        )));
    }
    Ok(gn_exponent(&spec))
}

fn sample(field: &dyn ScalarField, rule: &QuadratureRule) -> Result<Vec<Jet2>> {
    if field.dim() != rule.dim() {
        return Err(Error::Mismatch {
            expected: rule.dim(),
            got: field.dim(),
        });
    }
    rule.nodes().map(|x| field.jet(x)).collect()
}

fn sup_norm(jets: &[Jet2]) -> f64 {
    jets.iter().fold(0.0, |m, j| m.max(j.value().abs()))
}

fn lq_norm(jets: &[Jet2], rule: &QuadratureRule, q: f64) -> Result<f64> {
    let values: Vec<f64> = jets.iter().map(Jet2::value).collect();
    lr_norm(&values, rule, None, q)
}

/// `‖v‖_∞ / (‖v‖_{W^{s,p}}^{1−θ} ‖v‖_{L^q}^θ)` from samples at the rule
/// nodes (Hölder form of `W^{s,p}` for `p = ∞`).
pub fn gn_ratio(field: &dyn ScalarField, spec: &GnSpec, rule: &QuadratureRule) -> Result<f64> {
    gn_ratio_with_exponent(field, spec, gn_exponent(spec), rule)
}

/// [`gn_ratio`] with an arbitrary exponent in place of `θ`.
pub fn gn_ratio_with_exponent(
    field: &dyn ScalarField,
    spec: &GnSpec,
    theta: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let jets = sample(field, rule)?;
    let sup = sup_norm(&jets);
    if sup == 0.0 {
        return Err(Error::ZeroField);
    }
    let w = spec.norm_spec()?.norm(&jets, rule)?;
    let lq = lq_norm(&jets, rule, spec.q)?;
    let ratio = sup / (w.powf(1.0 - theta) * lq.powf(theta));
    if !ratio.is_finite() {
        return Err(Error::NonFinite("GN ratio".into()));
    }
    Ok(ratio)
}

/// `v_λ(x) = v(λx)` with its 2-jet by the chain rule.
pub struct Dilated<'a> {
    field: &'a dyn ScalarField,
    lambda: f64,
}

impl<'a> Dilated<'a> {
    pub fn new(field: &'a dyn ScalarField, lambda: f64) -> Self {
        Self { field, lambda }
    }
}

impl ScalarField for Dilated<'_> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn jet(&self, x: &[f64]) -> Result<Jet2> {
        let y: Vec<f64> = x.iter().map(|v| self.lambda * v).collect();
        let j = self.field.jet(&y)?;
        let d = j.dim();
        let l = self.lambda;
        let grad: Vec<f64> = j.gradient().iter().map(|g| l * g).collect();
        let hess: Vec<f64> = (0..d)
            .flat_map(|i| j.hessian_row(i).iter().map(move |h| l * l * h))
            .collect();
        Ok(Jet2::from_parts(j.value(), &grad, &hess))
    }
}

/// Outcome of a dilation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationCheck {
    pub theta: f64,
    pub lambdas: Vec<f64>,
    /// `|v_λ|_{s,p}^{1−θ} ‖v_λ‖_{L^q}^θ` with the top-order seminorm.
    pub products: Vec<f64>,
    /// Fitted log-log slope of the products against `λ`.
    pub slope: f64,
}

/// Dilation sweep of the scale-homogeneous product
/// `|v_λ|_{s,p}^{1−θ} ‖v_λ‖_{L^q}^θ` (top-order seminorm). For the balanced
/// `θ` its `λ`-exponent is zero.
///
/// `support_radius` bounds the support of `v` in the max norm (`None` for
/// fields that are not compactly supported). Every dilated support must fit
/// inside the box or interval of the rule.
pub fn dilation_slope(
    field: &dyn ScalarField,
    support_radius: Option<f64>,
    spec: &GnSpec,
    theta: f64,
    lambdas: &[f64],
    rule: &QuadratureRule,
) -> Result<DilationCheck> {
    if lambdas.len() < 2 || lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidParameter(
            "need at least two positive dilation factors".into(),
        ));
    }
    if let Some(a) = support_radius {
        let (lo, hi) = match rule.domain() {
            Domain::Box { half_width, .. } => (-half_width, half_width),
            Domain::Interval { a, b } => (a, b),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "dilation checks need a box or interval rule, got {other:?}"
                )))
            }
        };
        for &l in lambdas {
            if a / l > hi.min(-lo) {
                return Err(Error::SupportOverflow(format!(
                    "lambda = {l}, support radius {}",
                    a / l
                )));
            }
        }
    }
    let norm = spec.norm_spec()?;
    let mut products = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let jets = sample(&Dilated::new(field, l), rule)?;
        let top = norm.top_seminorm(&jets, rule)?;
        let lq = lq_norm(&jets, rule, spec.q)?;
        products.push(top.powf(1.0 - theta) * lq.powf(theta));
    }
    let slope = if products.iter().all(|p| *p == products[0]) {
        0.0
    } else {
        if products.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::ZeroField);
        }
        let mut pairs: Vec<(f64, f64)> = lambdas
            .iter()
            .copied()
            .zip(products.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.len() < 4 {
            let (a, b) = (pairs[0], pairs[pairs.len() - 1]);
            (b.1.ln() - a.1.ln()) / (b.0.ln() - a.0.ln())
        } else {
            fit_loglog(&pairs)?.slope
        }
    };
    Ok(DilationCheck {
        theta,
        lambdas: lambdas.to_vec(),
        products,
        slope,
    })
}

/// `|slope|` of the balanced product under dilation; zero up to quadrature
/// error when `θ` is the Gagliardo–Nirenberg exponent.
pub fn dilation_invariance_check(
    field: &dyn ScalarField,
    support_radius: Option<f64>,
    spec: &GnSpec,
    lambdas: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    Ok(dilation_slope(
        field,
        support_radius,
        spec,
        gn_exponent(spec),
        lambdas,
        rule,
    )?
    .slope
    .abs())
}

fn smoothness_terms(
    jets: &[Jet2],
    rule: &QuadratureRule,
    j: usize,
    m: usize,
    p: f64,
    eps: f64,
) -> Result<(f64, f64)> {
    if j > m || m > 2 {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= j <= m <= 2, got j={j}, m={m}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let lhs = derivative_norm(jets, rule, j, p)?;
    let top = derivative_norm(jets, rule, m, p)?;
    let base = derivative_norm(jets, rule, 0, p)?;
    let factor = if j == m {
        // Degenerate case: the inequality reads ‖D^m v‖ ≤ K(ε + 1)‖D^m v‖.
        top
    } else {
        eps * top + eps.powf(-(j as f64) / (m - j) as f64) * base
    };
    Ok((lhs, factor))
}

/// `K(ε‖D^m v‖_p + ε^{−j/(m−j)}‖v‖_p) − ‖D^j v‖_p`; nonnegative values
/// certify the interpolation inequality for this instance.
pub fn smoothness_interpolation_margin(
    field: &dyn ScalarField,
    rule: &QuadratureRule,
    j: usize,
    m: usize,
    p: f64,
    eps: f64,
    k_const: f64,
) -> Result<f64> {
    let jets = sample(field, rule)?;
    let (lhs, factor) = smoothness_terms(&jets, rule, j, m, p, eps)?;
    Ok(k_const * factor - lhs)
}

/// Smallest `K` for which the margin is nonnegative on this instance.
pub fn minimal_interpolation_constant(
    field: &dyn ScalarField,
    rule: &QuadratureRule,
    j: usize,
    m: usize,
    p: f64,
    eps: f64,
) -> Result<f64> {
    let jets = sample(field, rule)?;
    let (lhs, factor) = smoothness_terms(&jets, rule, j, m, p, eps)?;
    if factor == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(lhs / factor)
}

/// Compactly supported bump `(1 − |x|²/a²)^4` on `|x| < a`; `C³` with a
/// smooth 2-jet everywhere.
#[derive(Debug, Clone, Copy)]
pub struct PolynomialBump {
    pub dim: usize,
    pub radius: f64,
}

impl ScalarField for PolynomialBump {
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
        let a2 = self.radius * self.radius;
        let u = 1.0 - x.iter().map(|v| v * v).sum::<f64>() / a2;
        if u <= 0.0 {
            return Ok(Jet2::zero(self.dim));
        }
        // v = u^4 with u = 1 − |x|²/a²: ∂_i u = −2x_i/a², ∂_ij u = −2δ_ij/a².
        let inner = {
            let grad: Vec<f64> = x.iter().map(|v| -2.0 * v / a2).collect();
            let d = self.dim;
            let mut hess = vec![0.0; d * d];
            for i in 0..d {
                hess[i * d + i] = -2.0 / a2;
            }
            Jet2::from_parts(u, &grad, &hess)
        };
        Ok(inner.compose((u.powi(4), 4.0 * u.powi(3), 12.0 * u * u)))
    }
}

/// `sin(ω x)` on the line.
#[derive(Debug, Clone, Copy)]
pub struct SineField {
    pub omega: f64,
}

impl ScalarField for SineField {
    fn dim(&self) -> usize {
        1
    }

    fn jet(&self, x: &[f64]) -> Result<Jet2> {
        let w = self.omega;
        let (s, c) = (w * x[0]).sin_cos();
        Ok(Jet2::from_parts(s, &[w * c], &[-w * w * s]))
    }
}

/// Dilation factors of the standard sweep.
pub const DILATION_FACTORS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

/// A bump of radius 1/2 on `[−1, 1]^dim` with a composite Gauss rule whose
/// panel breaks contain every dilated support boundary.
#[derive(Debug, Clone, Copy)]
pub struct GnFixture {
    pub name: &'static str,
    pub spec: GnSpec,
    pub bump: PolynomialBump,
    pub panels: usize,
    pub per_panel: usize,
}

impl GnFixture {
    pub fn rule(&self) -> Result<QuadratureRule> {
        composite_box_rule(1.0, self.spec.dim, self.panels, self.per_panel)
    }

    /// Dilation sweep over [`DILATION_FACTORS`] with exponent `theta`.
    pub fn sweep(&self, theta: f64) -> Result<DilationCheck> {
        let rule = self.rule()?;
        dilation_slope(
            &self.bump,
            Some(self.bump.radius),
            &self.spec,
            theta,
            &DILATION_FACTORS,
            &rule,
        )
    }
}

/// Fixtures covering integer, Hölder and fractional Sobolev norms.
pub fn standard_gn_fixtures() -> Vec<GnFixture> {
    let inf = f64::INFINITY;
    let make = |name, s, p, q, dim, per_panel| GnFixture {
        name,
        spec: GnSpec::new(s, p, q, dim).expect("fixture parameters satisfy the hypotheses"),
        bump: PolynomialBump { dim, radius: 0.5 },
        panels: 64,
        per_panel,
    };
    vec![
        make("W1inf-L1", 1.0, inf, 1.0, 1, 6),
        make("W2inf-L2", 2.0, inf, 2.0, 1, 6),
        make("C1.5-L2", 1.5, inf, 2.0, 1, 6),
        make("W1.5,2-L2", 1.5, 2.0, 2.0, 1, 6),
        make("W0.75,4-L2", 0.75, 4.0, 2.0, 1, 6),
        make("W2,3-L3-2d", 2.0, 3.0, 3.0, 2, 4),
    ]
}

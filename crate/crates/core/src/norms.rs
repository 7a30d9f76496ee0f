//! Lebesgue, Sobolev, fractional Sobolev and Hölder norms of sampled fields.
//!
//! Fields are passed as samples at the nodes of a [`QuadratureRule`]; for
//! derivative norms the samples are [`Jet2`]s. Pointwise derivative
//! magnitudes are Euclidean (`|∇v|`) and Frobenius (`|D²v|`).

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::quadrature::QuadratureRule;

/// Default cap on node pairs visited by the double-sum seminorms.
pub const DEFAULT_PAIR_BUDGET: usize = 40_000_000;

/// Kind of norm described by a [`NormSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Lr,
    SobolevInt,
    SobolevFrac,
    Holder,
}

/// A norm of order `s = m + σ` with integrability exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    kind: NormKind,
    order: f64,
    p: f64,
}

impl NormSpec {
    pub fn new(kind: NormKind, order: f64, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        if !(order >= 0.0) || !order.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "order must be finite and >= 0, got {order}"
            )));
        }
        let sigma = order - order.floor();
        match kind {
            NormKind::Lr if order != 0.0 => {
                return Err(Error::InvalidParameter("an L^r norm has order 0".into()))
            }
            NormKind::SobolevInt if sigma != 0.0 => {
                return Err(Error::InvalidParameter(
                    "integer Sobolev norm needs integer order".into(),
                ))
            }
            NormKind::SobolevFrac if !(sigma > 0.0 && sigma < 1.0) || p.is_infinite() => {
                return Err(Error::InvalidParameter(
                    "fractional Sobolev norm needs a non-integer order and p < inf (use Holder)"
                        .into(),
                ))
            }
            NormKind::Holder if !(sigma > 0.0) || p.is_finite() => {
                return Err(Error::InvalidParameter(
                    "Holder norm needs a non-integer order and p = inf".into(),
                ))
            }
            _ => {}
        }
        if order.floor() > 2.0 {
            return Err(Error::InvalidParameter(format!(
                "derivatives are available up to order 2, got order {order}"
            )));
        }
        Ok(Self { kind, order, p })
    }

    /// The natural spec for order `s` and exponent `p`: integer Sobolev for
    /// integer `s`, fractional Sobolev for `p < ∞`, Hölder for `p = ∞`.
    pub fn for_order(s: f64, p: f64) -> Result<Self> {
        let kind = if s == 0.0 {
            NormKind::Lr
        } else if s.fract() == 0.0 {
            NormKind::SobolevInt
        } else if p.is_infinite() {
            NormKind::Holder
        } else {
            NormKind::SobolevFrac
        };
        Self::new(kind, s, p)
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Integer part `m` of the order.
    pub fn integer_part(&self) -> usize {
        self.order.floor() as usize
    }

    /// Fractional part `σ` of the order.
    pub fn fractional_part(&self) -> f64 {
        self.order - self.order.floor()
    }

    /// Full norm `‖v‖_{W^{m,p}} + |D^m v|_{W^{σ,p}}` (Hölder seminorm when
    /// `p = ∞`).
    pub fn norm(&self, jets: &[Jet2], rule: &QuadratureRule) -> Result<f64> {
        let m = self.integer_part();
        let base = sobolev_int_norm(jets, rule, m, self.p)?;
        match self.kind {
            NormKind::Lr | NormKind::SobolevInt => Ok(base),
            NormKind::SobolevFrac | NormKind::Holder => {
                Ok(base + self.top_fractional_seminorm(jets, rule)?)
            }
        }
    }

    /// Highest-order seminorm: `‖D^s v‖_p` for integer `s`, otherwise the
    /// fractional (or Hölder) seminorm of `D^m v`.
    pub fn top_seminorm(&self, jets: &[Jet2], rule: &QuadratureRule) -> Result<f64> {
        match self.kind {
            NormKind::Lr => lr_norm(&values_of(jets), rule, None, self.p),
            NormKind::SobolevInt => derivative_norm(jets, rule, self.integer_part(), self.p),
            NormKind::SobolevFrac | NormKind::Holder => self.top_fractional_seminorm(jets, rule),
        }
    }

    fn top_fractional_seminorm(&self, jets: &[Jet2], rule: &QuadratureRule) -> Result<f64> {
        let m = self.integer_part();
        let (comps, stride) = derivative_components(jets, m);
        let sigma = self.fractional_part();
        if self.p.is_infinite() {
            holder_seminorm_vec(&comps, stride, rule, sigma)
        } else {
            fractional_seminorm_vec(&comps, stride, rule, sigma, self.p, DEFAULT_PAIR_BUDGET)
        }
    }
}

fn values_of(jets: &[Jet2]) -> Vec<f64> {
    jets.iter().map(Jet2::value).collect()
}

/// Flattened components of `D^m v` (value, gradient or Hessian entries).
fn derivative_components(jets: &[Jet2], m: usize) -> (Vec<f64>, usize) {
    let dim = jets.first().map_or(0, Jet2::dim);
    match m {
        0 => (values_of(jets), 1),
        1 => (
            jets.iter().flat_map(|j| j.gradient().to_vec()).collect(),
            dim,
        ),
        _ => (
            jets.iter()
                .flat_map(|j| (0..dim).flat_map(move |i| j.hessian_row(i).to_vec()))
                .collect(),
            dim * dim,
        ),
    }
}

fn check_len(rule: &QuadratureRule, got: usize) -> Result<()> {
    if got != rule.len() {
        return Err(Error::Mismatch {
            expected: rule.len(),
            got,
        });
    }
    Ok(())
}

/// `(Σ w_i a_i |v_i|^r)^{1/r}`; for `r = ∞` the maximum of `|v_i|`.
pub fn lr_norm(
    values: &[f64],
    rule: &QuadratureRule,
    area_elements: Option<&[f64]>,
    r: f64,
) -> Result<f64> {
    check_len(rule, values.len())?;
    if let Some(a) = area_elements {
        check_len(rule, a.len())?;
    }
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("r must be >= 1, got {r}")));
    }
    if r.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let mut acc = 0.0;
    for (i, (v, w)) in values.iter().zip(rule.weights()).enumerate() {
        let a = area_elements.map_or(1.0, |a| a[i]);
        acc += w * a * v.abs().powf(r);
    }
    Ok(acc.powf(1.0 / r))
}

/// `‖D^j v‖_{L^p}` for `j ≤ 2`.
pub fn derivative_norm(jets: &[Jet2], rule: &QuadratureRule, j: usize, p: f64) -> Result<f64> {
    check_len(rule, jets.len())?;
    let pointwise: Vec<f64> = match j {
        0 => values_of(jets),
        1 => jets.iter().map(Jet2::gradient_norm).collect(),
        2 => jets.iter().map(Jet2::hessian_frobenius).collect(),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "derivatives are available up to order 2, got {j}"
            )))
        }
    };
    lr_norm(&pointwise, rule, None, p)
}

/// `Σ_{j ≤ m} ‖D^j v‖_{L^p}` (sum of the seminorms, not an ℓ^p combination).
pub fn sobolev_int_norm(jets: &[Jet2], rule: &QuadratureRule, m: usize, p: f64) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..=m {
        total += derivative_norm(jets, rule, j, p)?;
    }
    Ok(total)
}

/// Gagliardo seminorm `(∫∫ |v(x) − v(y)|^p / |x − y|^{dim + σp})^{1/p}`
/// discretized as a double sum over distinct nodes.
pub fn fractional_seminorm(
    values: &[f64],
    rule: &QuadratureRule,
    sigma: f64,
    p: f64,
) -> Result<f64> {
    fractional_seminorm_vec(values, 1, rule, sigma, p, DEFAULT_PAIR_BUDGET)
}

/// Vector-valued variant of [`fractional_seminorm`]; `values` holds
/// `stride` components per node and differences are measured in the
/// Euclidean norm.
pub fn fractional_seminorm_vec(
    values: &[f64],
    stride: usize,
    rule: &QuadratureRule,
    sigma: f64,
    p: f64,
    pair_budget: usize,
) -> Result<f64> {
    check_len(rule, values.len() / stride.max(1))?;
    if values.len() != rule.len() * stride {
        return Err(Error::Mismatch {
            expected: rule.len() * stride,
            got: values.len(),
        });
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in (0,1), got {sigma}"
        )));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [1, inf), got {p}"
        )));
    }
    let dim = rule.dim();
    if dim > 2 {
        return Err(Error::InvalidParameter(format!(
            "fractional seminorms are limited to dimension <= 2, got {dim}"
        )));
    }
    let n = rule.len();
    let pairs = n.saturating_mul(n);
    if pairs > pair_budget {
        return Err(Error::Budget {
            pairs,
            budget: pair_budget,
        });
    }
    let expo = (dim as f64 + sigma * p) / 2.0;
    let w = rule.weights();
    let mut acc = 0.0;
    for i in 0..n {
        let xi = rule.node(i);
        let vi = &values[i * stride..(i + 1) * stride];
        let mut row = 0.0;
        for j in (i + 1)..n {
            let xj = rule.node(j);
            let vj = &values[j * stride..(j + 1) * stride];
            let dist2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist2 == 0.0 {
                continue;
            }
            let diff2: f64 = vi.iter().zip(vj).map(|(a, b)| (a - b) * (a - b)).sum();
            if diff2 == 0.0 {
                continue;
            }
            row += w[j] * diff2.powf(0.5 * p) / dist2.powf(expo);
        }
        acc += w[i] * row;
    }
    Ok((2.0 * acc).powf(1.0 / p))
}

/// `max_{x ≠ y} |v(x) − v(y)| / |x − y|^σ` over sample pairs.
pub fn holder_seminorm(values: &[f64], positions: &[Vec<f64>], sigma: f64) -> Result<f64> {
    if values.len() != positions.len() {
        return Err(Error::Mismatch {
            expected: positions.len(),
            got: values.len(),
        });
    }
    if values.len() < 2 {
        return Err(Error::InvalidParameter(
            "Holder seminorm needs at least two samples".into(),
        ));
    }
    let mut best = 0.0_f64;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let dist: f64 = positions[i]
                .iter()
                .zip(&positions[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist > 0.0 {
                best = best.max((values[i] - values[j]).abs() / dist.powf(sigma));
            }
        }
    }
    Ok(best)
}

/// Vector-valued Hölder seminorm over the nodes of a rule.
pub fn holder_seminorm_vec(
    values: &[f64],
    stride: usize,
    rule: &QuadratureRule,
    sigma: f64,
) -> Result<f64> {
    if values.len() != rule.len() * stride {
        return Err(Error::Mismatch {
            expected: rule.len() * stride,
            got: values.len(),
        });
    }
    let n = rule.len();
    let pairs = n.saturating_mul(n);
    if pairs > DEFAULT_PAIR_BUDGET {
        return Err(Error::Budget {
            pairs,
            budget: DEFAULT_PAIR_BUDGET,
        });
    }
    let mut best = 0.0_f64;
    for i in 0..n {
        let xi = rule.node(i);
        let vi = &values[i * stride..(i + 1) * stride];
        for j in (i + 1)..n {
            let xj = rule.node(j);
            let dist2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist2 == 0.0 {
                continue;
            }
            let vj = &values[j * stride..(j + 1) * stride];
            let diff2: f64 = vi.iter().zip(vj).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.max(diff2.sqrt() / dist2.powf(0.5 * sigma));
        }
    }
    Ok(best)
}

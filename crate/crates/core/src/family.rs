//! The perturbed spheres `Ω_t` and every quantity of their optimality
//! chain: reference curvature `H₀`, `L^r` curvature deviation, radii gap,
//! and volume/perimeter deviations.
//!
//! All `t`-dependence lives over the flat ball `B_t`, so integrals are
//! evaluated with a cap rule on `B_t` and the unperturbed remainder of the
//! unit sphere is accounted for in closed form. Differences from the round
//! sphere are assembled from `Ψ_t` directly instead of subtracting nearly
//! equal totals.

use std::sync::Arc;

use crate::analytic_fields::{
    family_profile_jet, hemisphere_jet, perturbation_part_jet, perturbation_part_value,
    FamilyParams,
};
use crate::error::{Error, Result};
use crate::jet::FnField;
use crate::quadrature::{
    gauss_legendre_on, orthant_ball_rule, unit_ball_volume, unit_sphere_measure, QuadratureRule,
};
use crate::surface_geometry::{graph_mean_curvature, GraphPatch, RadiiGap};

/// Radial panel breaks of the cap rule, relative to `t`. The cutoff
/// switches on at `t/2` and its steep transition gets eight panels.
const CAP_RADIAL_BREAKS: [f64; 10] = [
    0.0, 0.5, 0.5625, 0.625, 0.6875, 0.75, 0.8125, 0.875, 0.9375, 1.0,
];

/// Gauss nodes per radial panel.
const CAP_RADIAL_NODES: usize = 6;

/// Grading exponent of the angular cap nodes in singular mode.
const SINGULAR_GRADING: f64 = 2.0;

/// Angular cap resolution used when none is given.
pub const DEFAULT_CAP_RESOLUTION: usize = 6;

/// Construction mode: smooth perturbation (`k + α ≥ 2`) or the `C^{1,α}`
/// variant with unbounded second derivatives, tied to the `L^r` exponent
/// that makes the curvature integrable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyMode {
    Regular,
    Singular { r: f64 },
}

/// One member `Γ_t = ∂Ω_t` of the family.
#[derive(Clone)]
pub struct FamilySurface {
    params: FamilyParams,
    singular: bool,
    perturbed: bool,
    cap: GraphPatch,
}

impl std::fmt::Debug for FamilySurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FamilySurface")
            .field("params", &self.params)
            .field("singular", &self.singular)
            .field("perturbed", &self.perturbed)
            .finish()
    }
}

/// Validates the parameters for the requested mode and assembles the cap
/// chart `x ↦ φ_t(x)` over the unit ball.
pub fn build_family_surface(params: FamilyParams, mode: FamilyMode) -> Result<FamilySurface> {
    let singular = match mode {
        FamilyMode::Regular => {
            if params.is_singular() {
                return Err(Error::InvalidParameter(format!(
                    "k + alpha = {} < 2 requires singular mode",
                    params.order()
                )));
            }
            false
        }
        FamilyMode::Singular { r } => {
            params.check_singular(r)?;
            true
        }
    };
    let p = params;
    let profile = Arc::new(FnField::new(p.chart_dim(), move |x: &[f64]| {
        family_profile_jet(x, &p)
    }));
    let cap = GraphPatch::new(params.dim_n, profile, 1.0)?;
    Ok(FamilySurface {
        params,
        singular,
        perturbed: true,
        cap,
    })
}

impl FamilySurface {
    /// The unit sphere charted like a family member but without
    /// perturbation; the calibration baseline.
    pub fn unit_sphere(dim_n: usize) -> Result<Self> {
        let params = FamilyParams::new(dim_n, 2, 1.0, FamilyParams::max_scale(dim_n, 2))?;
        let profile = Arc::new(FnField::new(dim_n - 1, hemisphere_jet));
        let cap = GraphPatch::new(dim_n, profile, 1.0)?;
        Ok(Self {
            params,
            singular: false,
            perturbed: false,
            cap,
        })
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn is_perturbed(&self) -> bool {
        self.perturbed
    }

    /// Graph chart of the upper hemisphere region, `|x| < 1`.
    pub fn cap(&self) -> &GraphPatch {
        &self.cap
    }

    /// Mean curvature at the point over `x` in the upper chart.
    pub fn mean_curvature(&self, x: &[f64]) -> Result<f64> {
        self.cap.mean_curvature(x)
    }

    /// `Ψ_t(x) = φ_t(x) − φ_0(x)` (zero for the unperturbed sphere).
    pub fn perturbation(&self, x: &[f64]) -> f64 {
        if self.perturbed {
            perturbation_part_value(x, &self.params)
        } else {
            0.0
        }
    }
}

/// Quadrature configuration for family evaluations. The cap rule is built
/// once on the unit ball and rescaled to `B_t`, so every `t` sees the same
/// relative node pattern.
#[derive(Debug, Clone)]
pub struct FamilyRules {
    resolution: usize,
    unit_cap: QuadratureRule,
    ray_samples: usize,
}

impl FamilyRules {
    /// `resolution` Gauss nodes per hyperspherical angle, graded towards the
    /// coordinate hyperplanes in singular mode; the radial panels are fixed.
    pub fn new(chart_dim: usize, resolution: usize, singular: bool) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidParameter(
                "cap resolution must be >= 2".into(),
            ));
        }
        let grading = singular.then_some(SINGULAR_GRADING);
        let unit_cap = orthant_ball_rule(
            chart_dim,
            1.0,
            resolution,
            &CAP_RADIAL_BREAKS,
            CAP_RADIAL_NODES,
            grading,
        )?;
        Ok(Self {
            resolution,
            unit_cap,
            ray_samples: 2048,
        })
    }

    /// Uses a caller-supplied cap rule on the unit ball of the chart.
    pub fn from_unit_rule(unit_cap: QuadratureRule, resolution: usize) -> Self {
        Self {
            resolution,
            unit_cap,
            ray_samples: 2048,
        }
    }

    pub fn for_surface(surface: &FamilySurface, resolution: usize) -> Result<Self> {
        Self::new(surface.params.chart_dim(), resolution, surface.singular)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Number of samples on each of the two dense rays used for the radii.
    pub fn with_ray_samples(mut self, n: usize) -> Self {
        self.ray_samples = n.max(1);
        self
    }

    pub fn cap_rule(&self, t: f64) -> QuadratureRule {
        self.unit_cap.scaled(t)
    }

    pub fn node_count(&self) -> usize {
        self.unit_cap.len()
    }
}

/// Radial offset `|(x, φ_0 + Ψ)| − 1 = (2φ_0Ψ + Ψ²)/(√(1 + 2φ_0Ψ + Ψ²) + 1)`
/// for `|x|² + φ_0² = 1`.
fn radial_offset(phi0: f64, psi: f64) -> f64 {
    let e = 2.0 * phi0 * psi + psi * psi;
    e / ((1.0 + e).sqrt() + 1.0)
}

/// Pointwise data of the cap at the rule nodes.
#[derive(Debug, Clone)]
pub struct CapSamples {
    /// `H_t − 1` at every node.
    pub h_minus_one: Vec<f64>,
    /// Area element `√(1 + |∇φ_t|²)` at every node.
    pub area: Vec<f64>,
    pub weights: Vec<f64>,
    /// `|Γ_t| − |S^{N−1}|`.
    pub perimeter_excess: f64,
    /// `|Ω_t| − |B_1|`.
    pub volume_excess: f64,
    /// Measure of the unperturbed part `Γ_t \ (B_t × R)`.
    pub remainder_measure: f64,
    /// `max Ψ_t` over nodes and rays.
    pub sup_psi: f64,
    /// `max (|y| − 1)` over the surface samples (the minimum is 0).
    pub max_offset: f64,
}

/// Area of the spherical cap above `B_t`: `|S^{N−2}| ∫₀ᵗ ρ^{N−2}/√(1−ρ²) dρ`.
fn spherical_cap_area(dim_n: usize, t: f64) -> f64 {
    let (x, w) = gauss_legendre_on(0.0, t, 64, None);
    let inner: f64 = x
        .iter()
        .zip(&w)
        .map(|(r, w)| w * r.powi(dim_n as i32 - 2) / (1.0 - r * r).sqrt())
        .sum();
    unit_sphere_measure(dim_n - 1) * inner
}

/// Evaluates the cap at all nodes of the rule for `t` plus the dense rays.
pub fn cap_samples(surface: &FamilySurface, rules: &FamilyRules) -> Result<CapSamples> {
    let params = surface.params;
    let n = params.dim_n;
    let d = params.chart_dim();
    let t = params.t;
    let rule = rules.cap_rule(t);
    if rule.dim() != d {
        return Err(Error::Mismatch {
            expected: d,
            got: rule.dim(),
        });
    }
    let mut h_minus_one = Vec::with_capacity(rule.len());
    let mut area = Vec::with_capacity(rule.len());
    let mut d_perimeter = 0.0;
    let mut d_volume = 0.0;
    let mut sup_psi = 0.0_f64;
    let mut max_offset = 0.0_f64;
    for (x, w) in rule.nodes().zip(rule.weights()) {
        let base = hemisphere_jet(x)?;
        let (full, psi_val, dp) = if surface.perturbed {
            let psi = perturbation_part_jet(x, &params)?;
            let g0 = base.gradient();
            let gp = psi.gradient();
            let cross: f64 = g0.iter().zip(gp).map(|(a, b)| a * b).sum();
            let full = base.add(&psi);
            let a0 = (1.0 + base.gradient_norm_sq()).sqrt();
            let at = (1.0 + full.gradient_norm_sq()).sqrt();
            (
                full,
                psi.value(),
                (2.0 * cross + psi.gradient_norm_sq()) / (a0 + at),
            )
        } else {
            (base, 0.0, 0.0)
        };
        let h = graph_mean_curvature(&full, n);
        if !h.is_finite() {
            return Err(Error::NonFinite(format!("mean curvature at {x:?}")));
        }
        h_minus_one.push(h - 1.0);
        area.push((1.0 + full.gradient_norm_sq()).sqrt());
        d_perimeter += w * dp;
        d_volume += w * psi_val;
        sup_psi = sup_psi.max(psi_val);
        max_offset = max_offset.max(radial_offset(base.value(), psi_val));
    }
    if surface.perturbed {
        // Dense rays along e₁ and the diagonal, where Σ|x_i|^{k+α} peaks on
        // spheres for k + α ≥ 2 and k + α < 2 respectively.
        let m = rules.ray_samples;
        let diag = 1.0 / (d as f64).sqrt();
        for dir in [0usize, 1] {
            for i in 1..=m {
                let u = t * i as f64 / (m + 1) as f64;
                let x: Vec<f64> = (0..d)
                    .map(|j| match dir {
                        0 if j == 0 => u,
                        0 => 0.0,
                        _ => u * diag,
                    })
                    .collect();
                let psi = perturbation_part_value(&x, &params);
                let phi0 = (1.0 - u * u).sqrt();
                sup_psi = sup_psi.max(psi);
                max_offset = max_offset.max(radial_offset(phi0, psi));
            }
        }
    }
    let remainder_measure = unit_sphere_measure(n) - spherical_cap_area(n, t);
    Ok(CapSamples {
        h_minus_one,
        area,
        weights: rule.weights().to_vec(),
        perimeter_excess: d_perimeter,
        volume_excess: d_volume,
        remainder_measure,
        sup_psi,
        max_offset,
    })
}

impl CapSamples {
    /// `H₀ − 1 = (δP − N δV) / (N (|B_1| + δV))`, using `|S^{N−1}| = N |B_1|`.
    pub fn h0_minus_one(&self, dim_n: usize) -> f64 {
        let nf = dim_n as f64;
        (self.perimeter_excess - nf * self.volume_excess)
            / (nf * (unit_ball_volume(dim_n) + self.volume_excess))
    }

    /// `‖H_t − H₀‖_{L^r(Γ_t)}`: cap integral plus the constant deviation
    /// `|1 − H₀|` on the round remainder.
    pub fn deviation(&self, dim_n: usize, r: f64) -> f64 {
        let shift = self.h0_minus_one(dim_n);
        let cap: f64 = self
            .h_minus_one
            .iter()
            .zip(&self.area)
            .zip(&self.weights)
            .map(|((h, a), w)| w * a * (h - shift).abs().powf(r))
            .sum();
        (cap + shift.abs().powf(r) * self.remainder_measure).powf(1.0 / r)
    }

    /// `max |H_t − H₀|` over the cap nodes.
    pub fn max_pointwise_deviation(&self, dim_n: usize) -> f64 {
        let shift = self.h0_minus_one(dim_n);
        self.h_minus_one
            .iter()
            .fold(0.0, |m, h| m.max((h - shift).abs()))
    }
}

/// `H₀ = |Γ_t| / (N |Ω_t|)`.
pub fn reference_constant(surface: &FamilySurface, rules: &FamilyRules) -> Result<f64> {
    Ok(1.0 + cap_samples(surface, rules)?.h0_minus_one(surface.params.dim_n))
}

/// `(||Ω_t| − |B_1||, ||Γ_t| − |S^{N−1}||)`.
pub fn volume_perimeter_deviation(
    surface: &FamilySurface,
    rules: &FamilyRules,
) -> Result<(f64, f64)> {
    let s = cap_samples(surface, rules)?;
    Ok((s.volume_excess.abs(), s.perimeter_excess.abs()))
}

fn check_r(surface: &FamilySurface, r: f64) -> Result<()> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "r must be finite and > 1, got {r}"
        )));
    }
    if surface.singular {
        surface.params.check_singular(r)?;
    }
    Ok(())
}

/// `‖H_t − H₀‖_{L^r(Γ_t)}`.
pub fn curvature_deviation_norm(
    surface: &FamilySurface,
    r: f64,
    rules: &FamilyRules,
) -> Result<f64> {
    check_r(surface, r)?;
    Ok(cap_samples(surface, rules)?.deviation(surface.params.dim_n, r))
}

/// Pass/fail of each explicit bound of the construction at one `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundFlags {
    /// `sup Ψ_t ≤ (N−1) t^{k+α}`.
    pub sup_psi: bool,
    /// `sup Ψ_t ≤ 1/2`.
    pub psi_half: bool,
    /// `||Ω_t| − |B_1|| ≤ |S^{N−2}| t^{k+α+N−1}`.
    pub volume: bool,
    /// `ρ_e − ρ_i ≥ (2/3)(t/2)^{k+α}`.
    pub gap_lower: bool,
    /// `ρ_e − ρ_i ≤ 2(N−1) t^{k+α}(1 + t)`.
    pub gap_upper: bool,
}

impl BoundFlags {
    pub fn all(&self) -> bool {
        self.sup_psi && self.psi_half && self.volume && self.gap_lower && self.gap_upper
    }
}

/// One row of a family sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub t: f64,
    pub h0: f64,
    pub h0_minus_one: f64,
    pub dev_lr: f64,
    pub gap: f64,
    pub radii: RadiiGap,
    pub vol_dev: f64,
    pub per_dev: f64,
    pub sup_psi: f64,
    pub max_pointwise_deviation: f64,
    pub bounds: BoundFlags,
}

/// Evaluates every quantity of the chain for one surface.
pub fn evaluate_family(
    surface: &FamilySurface,
    r: f64,
    rules: &FamilyRules,
) -> Result<FamilyReport> {
    check_r(surface, r)?;
    let s = cap_samples(surface, rules)?;
    let params = surface.params;
    let n = params.dim_n;
    let nf = n as f64;
    let t = params.t;
    let p = params.order();
    let h0m1 = s.h0_minus_one(n);
    let dev_lr = s.deviation(n, r);
    let radii = RadiiGap {
        rho_e: 1.0 + s.max_offset,
        rho_i: 1.0,
        gap: s.max_offset,
    };
    let vol_dev = s.volume_excess.abs();
    let per_dev = s.perimeter_excess.abs();
    let slack = 1.0 + 1e-12;
    let bounds = if surface.perturbed {
        BoundFlags {
            sup_psi: s.sup_psi <= (nf - 1.0) * t.powf(p) * slack,
            psi_half: s.sup_psi <= 0.5,
            volume: vol_dev <= unit_sphere_measure(n - 1) * t.powf(p + nf - 1.0) * slack,
            gap_lower: radii.gap >= 2.0 / 3.0 * (t / 2.0).powf(p),
            gap_upper: radii.gap <= 2.0 * (nf - 1.0) * t.powf(p) * (1.0 + t),
        }
    } else {
        BoundFlags {
            sup_psi: true,
            psi_half: true,
            volume: true,
            gap_lower: true,
            gap_upper: true,
        }
    };
    let report = FamilyReport {
        t,
        h0: 1.0 + h0m1,
        h0_minus_one: h0m1,
        dev_lr,
        gap: radii.gap,
        radii,
        vol_dev,
        per_dev,
        sup_psi: s.sup_psi,
        max_pointwise_deviation: s.max_pointwise_deviation(n),
        bounds,
    };
    for (name, v) in [
        ("H0", report.h0),
        ("dev_Lr", dev_lr),
        ("gap", report.gap),
        ("per_dev", per_dev),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{name} at t = {t}")));
        }
    }
    Ok(report)
}

/// Builds the surface for `params` and evaluates it.
pub fn family_report(
    params: FamilyParams,
    mode: FamilyMode,
    r: f64,
    rules: &FamilyRules,
) -> Result<FamilyReport> {
    let surface = build_family_surface(params, mode)?;
    evaluate_family(&surface, r, rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules(params: &FamilyParams, res: usize, singular: bool) -> FamilyRules {
        FamilyRules::new(params.chart_dim(), res, singular).unwrap()
    }

    #[test]
    fn radial_offset_matches_direct_formula() {
        let (phi0, psi): (f64, f64) = (0.8, 1e-3);
        let direct = (0.36 + (phi0 + psi) * (phi0 + psi)).sqrt() - 1.0;
        assert!((radial_offset(phi0, psi) - direct).abs() < 1e-15);
        assert_eq!(radial_offset(0.9, 0.0), 0.0);
    }

    #[test]
    fn spherical_cap_area_closed_form() {
        // N = 3: area above B_t is 2π(1 − √(1 − t²)).
        let t: f64 = 0.3;
        let exact = 2.0 * std::f64::consts::PI * (1.0 - (1.0 - t * t).sqrt());
        assert!((spherical_cap_area(3, t) - exact).abs() < 1e-14);
    }

    #[test]
    fn unit_sphere_calibration() {
        for n in 2..8 {
            let s = FamilySurface::unit_sphere(n).unwrap();
            let r = FamilyRules::new(n - 1, 6, false).unwrap();
            let report = evaluate_family(&s, 2.0, &r).unwrap();
            assert!(report.h0_minus_one.abs() < 1e-14);
            assert!(report.dev_lr < 1e-10);
            assert_eq!(report.gap, 0.0);
            assert_eq!(report.vol_dev, 0.0);
            assert_eq!(report.per_dev, 0.0);
        }
    }

    #[test]
    fn mode_validation() {
        let t1 = FamilyParams::max_scale(5, 1);
        let p = FamilyParams::new(5, 1, 0.6, t1).unwrap();
        assert!(build_family_surface(p, FamilyMode::Singular { r: 2.0 }).is_ok());
        assert!(build_family_surface(p, FamilyMode::Regular).is_err());
        let p = FamilyParams::new(5, 1, 0.4, t1).unwrap();
        assert!(matches!(
            build_family_surface(p, FamilyMode::Singular { r: 2.0 }),
            Err(Error::Integrability(_))
        ));
        let p = FamilyParams::new(5, 2, 1.0, FamilyParams::max_scale(5, 2)).unwrap();
        assert!(build_family_surface(p, FamilyMode::Singular { r: 2.0 }).is_err());
    }

    #[test]
    fn curvature_is_one_outside_the_cap() {
        let t1 = FamilyParams::max_scale(4, 2);
        let p = FamilyParams::new(4, 2, 1.0, t1).unwrap();
        let s = build_family_surface(p, FamilyMode::Regular).unwrap();
        for x in [[t1, 0.0, 0.0], [0.2, 0.3, -0.1], [0.0, 0.0, 0.9]] {
            assert!((s.mean_curvature(&x).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_psi_at_t1() {
        let t1 = FamilyParams::max_scale(5, 2);
        let p = FamilyParams::new(5, 2, 1.0, t1).unwrap();
        let report = family_report(p, FamilyMode::Regular, 2.0, &rules(&p, 6, false)).unwrap();
        assert!(report.sup_psi <= 4.0 * t1.powi(3));
        assert!(report.bounds.all(), "{:?}", report.bounds);
    }

    #[test]
    fn h0_is_close_to_one() {
        let t1 = FamilyParams::max_scale(4, 2);
        let p = FamilyParams::new(4, 2, 1.0, t1).unwrap();
        let h0 = reference_constant(
            &build_family_surface(p, FamilyMode::Regular).unwrap(),
            &rules(&p, 6, false),
        )
        .unwrap();
        assert!((h0 - 1.0).abs() < 1e-6);
        assert!(h0 != 1.0);
    }

    #[test]
    fn volume_excess_matches_independent_box_quadrature() {
        let t1 = FamilyParams::max_scale(3, 2);
        let p = FamilyParams::new(3, 2, 1.0, t1).unwrap();
        let s = build_family_surface(p, FamilyMode::Regular).unwrap();
        let (vol, _) = volume_perimeter_deviation(&s, &rules(&p, 10, false)).unwrap();
        let boxr = crate::quadrature::composite_box_rule(t1, 2, 64, 6).unwrap();
        let reference = boxr.integrate(|x| perturbation_part_value(x, &p));
        assert!(
            ((vol - reference) / reference).abs() < 1e-6,
            "{vol} vs {reference}"
        );
    }

    #[test]
    fn deviation_decreases_with_t() {
        let (n, k, alpha, r) = (6, 2, 1.0, 2.0);
        let t1 = FamilyParams::max_scale(n, k);
        let mut prev = f64::INFINITY;
        for j in 0..4 {
            let p = FamilyParams::new(n, k, alpha, t1 / 4f64.powi(j)).unwrap();
            let d = family_report(p, FamilyMode::Regular, r, &rules(&p, 4, false))
                .unwrap()
                .dev_lr;
            assert!(d < prev && d > 0.0);
            prev = d;
        }
    }

    #[test]
    fn integrability_guard() {
        let t1 = FamilyParams::max_scale(5, 1);
        let p = FamilyParams::new(5, 1, 0.8, t1).unwrap();
        let s = build_family_surface(p, FamilyMode::Singular { r: 2.0 }).unwrap();
        let rl = rules(&p, 4, true);
        assert!(curvature_deviation_norm(&s, 2.0, &rl).is_ok());
        assert!(matches!(
            curvature_deviation_norm(&s, 6.0, &rl),
            Err(Error::Integrability(_))
        ));
    }
}

//! Configuration-driven experiment runs: t-sweeps of the optimality family,
//! the interpolation, stereographic and torsion suites, and their reports.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic_fields::FamilyParams;
use crate::error::{Error, Result};
use crate::experiment::{
    check_hypothesis, profile_bound, regime, stability_exponent, Regime, ScalingFit,
};
use crate::family::{
    evaluate_family, family_report, FamilyMode, FamilyReport, FamilyRules, FamilySurface,
    DEFAULT_CAP_RESOLUTION,
};
use crate::gn_interpolation::{
    gn_exponent, minimal_interpolation_constant, smoothness_interpolation_margin,
    standard_gn_fixtures, DilationCheck, SineField,
};
use crate::jet::{ConstantField, ScalarField};
use crate::quadrature::{ball_rule, composite_box_rule, sphere_rule};
use crate::report::{format_f64, write_family_csv, write_table, FamilyRow, LogLogPlot, PlotLine};
use crate::stereographic::{
    chart_jet, pointwise_derivative_slack, sobolev_transfer_ratio, PolynomialField, SphereChart,
    TransferRules,
};
use crate::surface_geometry::RadialSurface;
use crate::torsion::{
    cosine_perturbed_circle, disk, ellipse, fundamental_identity_residual, hopf_bounds_check,
    rough_stability_check, solve_torsion, HopfRatios, IdentityResidual, RoughStability,
    TorsionMesh,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentMode {
    Family,
    Gn,
    Stereo,
    Torsion,
    Profile,
}

impl FromStr for ExperimentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "family" => Self::Family,
            "gn" => Self::Gn,
            "stereo" => Self::Stereo,
            "torsion" => Self::Torsion,
            "profile" => Self::Profile,
            other => return Err(Error::Config(format!("unknown mode {other:?}"))),
        })
    }
}

impl fmt::Display for ExperimentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Family => "family",
            Self::Gn => "gn",
            Self::Stereo => "stereo",
            Self::Torsion => "torsion",
            Self::Profile => "profile",
        })
    }
}

pub const DEFAULT_T_COUNT: usize = 12;
/// The default grid spans `[t₁/64, t₁]`.
pub const DEFAULT_T_SPAN: f64 = 64.0;
pub const DEFAULT_STEREO_RESOLUTION: usize = 12;
pub const DEFAULT_TORSION_RADIAL: usize = 64;
/// Angular nodes per radial cell of the torsion mesh.
pub const TORSION_ASPECT: usize = 4;
/// Random polynomial fixtures per `(N, p)` case.
pub const STEREO_RANDOM_FIXTURES: usize = 50;
pub const STEREO_CASES: [(usize, f64); 3] = [(3, 2.0), (4, 2.0), (4, 3.0)];
/// Identity residuals below this are at round-off; no order is observable.
/// Largest accepted `resolution` in any mode.
pub const MAX_RESOLUTION: usize = 512;
pub const ROUND_OFF_FLOOR: f64 = 1e-10;
pub const ROUGH_EPSILONS: [f64; 3] = [0.04, 0.02, 0.01];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    pub dim_n: usize,
    pub k: u32,
    pub alpha: f64,
    pub r: f64,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t_count: usize,
    /// Cap resolution (family), rule resolution (stereo) or radial cells
    /// (torsion); `None` picks the mode default.
    pub resolution: Option<usize>,
    pub singular: bool,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: ExperimentMode::Family,
            dim_n: 6,
            k: 2,
            alpha: 1.0,
            r: 2.0,
            t_min: None,
            t_max: None,
            t_count: DEFAULT_T_COUNT,
            resolution: None,
            singular: false,
            seed: 2024,
            out_dir: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

impl ExperimentConfig {
    /// Sets one `key = value` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "mode" => self.mode = value.parse()?,
            "dim_n" => self.dim_n = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "r" => self.r = parse_value(key, value)?,
            "t_min" => self.t_min = Some(parse_value(key, value)?),
            "t_max" => self.t_max = Some(parse_value(key, value)?),
            "t_count" => self.t_count = parse_value(key, value)?,
            "resolution" => self.resolution = Some(parse_value(key, value)?),
            "singular" => self.singular = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "out" => self.out_dir = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` text with `#` comments on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn config_error(e: Error) -> Error {
        match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        }
    }

    pub fn family_mode(&self) -> FamilyMode {
        if self.singular {
            FamilyMode::Singular { r: self.r }
        } else {
            FamilyMode::Regular
        }
    }

    pub fn cap_resolution(&self) -> usize {
        self.resolution.unwrap_or(DEFAULT_CAP_RESOLUTION)
    }

    pub fn torsion_mesh(&self) -> Result<TorsionMesh> {
        let m = self.resolution.unwrap_or(DEFAULT_TORSION_RADIAL);
        TorsionMesh::new(m, TORSION_ASPECT * m).map_err(Self::config_error)
    }

    /// `t_count` log-spaced values over `[t_min, t_max]`, increasing.
    pub fn t_grid(&self) -> Result<Vec<f64>> {
        let t1 = FamilyParams::max_scale(self.dim_n, self.k);
        let hi = self.t_max.unwrap_or(t1);
        let lo = self.t_min.unwrap_or(hi / DEFAULT_T_SPAN);
        if !(lo > 0.0 && lo < hi && hi <= t1 * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "need 0 < t_min < t_max <= t1 = {t1}, got [{lo}, {hi}]"
            )));
        }
        if self.t_count < 4 {
            return Err(Error::Config(format!(
                "t_count must be at least 4, got {}",
                self.t_count
            )));
        }
        let n = self.t_count - 1;
        Ok((0..=n)
            .map(|i| {
                if i == n {
                    hi
                } else {
                    lo * (hi / lo).powf(i as f64 / n as f64)
                }
            })
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() {
            return Err(Error::Config(format!("r must be finite, got {}", self.r)));
        }
        if let Some(res) = self.resolution {
            if res == 0 || res > MAX_RESOLUTION {
                return Err(Error::Config(format!(
                    "resolution must lie in 1..={MAX_RESOLUTION}, got {res}"
                )));
            }
        }
        match self.mode {
            ExperimentMode::Family => {
                let params = FamilyParams::new(
                    self.dim_n,
                    self.k,
                    self.alpha,
                    FamilyParams::max_scale(self.dim_n, self.k),
                )
                .map_err(Self::config_error)?;
                check_hypothesis(self.dim_n, self.k, self.alpha, self.r)
                    .map_err(Self::config_error)?;
                if self.singular {
                    params.check_singular(self.r).map_err(Self::config_error)?;
                } else if params.is_singular() {
                    return Err(Error::Config(format!(
                        "k + alpha = {} < 2 needs singular mode",
                        params.order()
                    )));
                }
                self.t_grid()?;
            }
            ExperimentMode::Profile => {
                check_hypothesis(self.dim_n, self.k, self.alpha, self.r)
                    .map_err(Self::config_error)?;
            }
            ExperimentMode::Torsion => {
                if !(self.r >= 1.0) {
                    return Err(Error::Config(format!(
                        "torsion mode needs r >= 1, got {}",
                        self.r
                    )));
                }
                self.torsion_mesh()?;
            }
            ExperimentMode::Gn | ExperimentMode::Stereo => {}
        }
        Ok(())
    }
}

/// One named pass/fail outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Runs `f` on every item, spreading contiguous chunks over threads.
/// Results keep the input order.
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> Result<U> + Sync) -> Result<Vec<U>> {
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(items.len());
    let chunk = items.len().div_ceil(threads);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(f).collect::<Result<Vec<U>>>()))
            .collect();
        let mut out = Vec::with_capacity(items.len());
        for h in handles {
            out.extend(h.join().expect("worker thread panicked")?);
        }
        Ok(out)
    })
}

/// Predicted log-log slopes of the family quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedRates {
    /// `dev_Lr` against `t`: `k+α + (N−1−2r)/r`.
    pub dev: f64,
    /// gap against `t`: `k+α`.
    pub gap: f64,
    /// gap against `dev_Lr`: the ratio of the two, `τ` in the power regime.
    pub tau: f64,
    pub vol: f64,
    /// `k+α+N−1`, or `2α+N−1` in singular mode.
    pub per: f64,
}

pub fn predicted_rates(dim_n: usize, k: u32, alpha: f64, r: f64, singular: bool) -> PredictedRates {
    let p = k as f64 + alpha;
    let nf = dim_n as f64;
    let dev = p + (nf - 1.0 - 2.0 * r) / r;
    PredictedRates {
        dev,
        gap: p,
        tau: p / dev,
        vol: p + nf - 1.0,
        per: if singular {
            2.0 * alpha + nf - 1.0
        } else {
            p + nf - 1.0
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyFits {
    pub tau: ScalingFit,
    pub dev: ScalingFit,
    pub gap: ScalingFit,
    pub vol: ScalingFit,
    pub per: ScalingFit,
}

#[derive(Debug, Clone)]
pub struct FamilySweep {
    pub config: ExperimentConfig,
    pub resolution: usize,
    pub reports: Vec<FamilyReport>,
    pub predicted: PredictedRates,
    pub fits: FamilyFits,
}

fn family_context(cfg: &ExperimentConfig, t: f64) -> String {
    format!(
        "N={} k={} alpha={} r={} singular={} t={t}",
        cfg.dim_n, cfg.k, cfg.alpha, cfg.r, cfg.singular
    )
}

/// Evaluates the family over the t-grid at the given cap resolution.
pub fn family_reports(cfg: &ExperimentConfig, resolution: usize) -> Result<Vec<FamilyReport>> {
    cfg.validate()?;
    let grid = cfg.t_grid()?;
    let base = FamilyParams::new(cfg.dim_n, cfg.k, cfg.alpha, grid[0])?;
    let rules = FamilyRules::new(base.chart_dim(), resolution, cfg.singular)?;
    let mode = cfg.family_mode();
    par_map(&grid, |&t| {
        base.with_t(t)
            .and_then(|p| family_report(p, mode, cfg.r, &rules))
            .map_err(|e| e.at(family_context(cfg, t)))
    })
}

/// Full sweep with slope fits against the predicted rates.
pub fn family_sweep(cfg: &ExperimentConfig) -> Result<FamilySweep> {
    let resolution = cfg.cap_resolution();
    let reports = family_reports(cfg, resolution)?;
    let predicted = predicted_rates(cfg.dim_n, cfg.k, cfg.alpha, cfg.r, cfg.singular);
    let series =
        |f: &dyn Fn(&FamilyReport) -> (f64, f64)| reports.iter().map(f).collect::<Vec<_>>();
    let fit = |name: &str, pairs: Vec<(f64, f64)>, predicted: f64| {
        ScalingFit::compare(&pairs, predicted).map_err(|e| e.at(format!("{name} fit")))
    };
    let fits = FamilyFits {
        tau: fit("gap vs dev", series(&|r| (r.dev_lr, r.gap)), predicted.tau)?,
        dev: fit("dev", series(&|r| (r.t, r.dev_lr)), predicted.dev)?,
        gap: fit("gap", series(&|r| (r.t, r.gap)), predicted.gap)?,
        vol: fit("vol", series(&|r| (r.t, r.vol_dev)), predicted.vol)?,
        per: fit("per", series(&|r| (r.t, r.per_dev)), predicted.per)?,
    };
    Ok(FamilySweep {
        config: cfg.clone(),
        resolution,
        reports,
        predicted,
        fits,
    })
}

/// Default slope tolerance; singular mode widens it for the deviation.
pub const SLOPE_TOLERANCE: f64 = 0.05;
pub const SINGULAR_SLOPE_TOLERANCE: f64 = 0.07;

fn slope_check(name: &str, fit: &ScalingFit, tolerance: f64) -> Check {
    Check::new(
        name,
        fit.within(tolerance),
        format!(
            "slope {:.4} vs predicted {:.4} (rel. error {:.2}%, tol {:.0}%{})",
            fit.slope,
            fit.predicted,
            100.0 * fit.relative_error,
            100.0 * tolerance,
            if fit.excluded_largest {
                ", largest t excluded"
            } else {
                ""
            }
        ),
    )
}

pub fn family_checks(sweep: &FamilySweep) -> Vec<Check> {
    let dev_tol = if sweep.config.singular {
        SINGULAR_SLOPE_TOLERANCE
    } else {
        SLOPE_TOLERANCE
    };
    let tau_name = match regime(sweep.config.dim_n, sweep.config.r) {
        Regime::Power => "tau slope (gap vs dev)",
        _ => "gap vs dev slope",
    };
    let count = |f: &dyn Fn(&FamilyReport) -> bool| sweep.reports.iter().filter(|r| f(r)).count();
    let n = sweep.reports.len();
    let gap_ok = count(&|r| r.bounds.gap_lower);
    let vol_ok = count(&|r| r.bounds.volume);
    vec![
        slope_check(tau_name, &sweep.fits.tau, SLOPE_TOLERANCE),
        slope_check("dev slope", &sweep.fits.dev, dev_tol),
        slope_check("gap slope", &sweep.fits.gap, SLOPE_TOLERANCE),
        Check::new(
            "gap lower bound",
            gap_ok == n,
            format!("holds at {gap_ok}/{n} grid points"),
        ),
        slope_check("vol slope", &sweep.fits.vol, SLOPE_TOLERANCE),
        slope_check("per slope", &sweep.fits.per, SLOPE_TOLERANCE),
        Check::new(
            "vol bound",
            vol_ok == n,
            format!("holds at {vol_ok}/{n} grid points"),
        ),
    ]
}

/// Cap-resolution doubling over the whole t-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementCheck {
    pub coarse: usize,
    pub fine: usize,
    /// Largest `|dev_fine − dev_coarse| / dev_fine` over the grid.
    pub max_relative_change: f64,
    /// Largest sampled `|H − H₀|` on the cap, per t, at both resolutions.
    pub max_deviation_coarse: Vec<f64>,
    pub max_deviation_fine: Vec<f64>,
}

impl RefinementCheck {
    /// True when the sampled supremum grows under refinement at every t.
    pub fn max_grows(&self) -> bool {
        self.max_deviation_coarse
            .iter()
            .zip(&self.max_deviation_fine)
            .all(|(c, f)| f > c)
    }
}

pub fn family_refinement(cfg: &ExperimentConfig) -> Result<RefinementCheck> {
    let coarse = cfg.cap_resolution();
    let fine = 2 * coarse;
    let a = family_reports(cfg, coarse)?;
    let b = family_reports(cfg, fine)?;
    let max_relative_change = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (y.dev_lr - x.dev_lr).abs() / y.dev_lr)
        .fold(0.0, f64::max);
    Ok(RefinementCheck {
        coarse,
        fine,
        max_relative_change,
        max_deviation_coarse: a.iter().map(|r| r.max_pointwise_deviation).collect(),
        max_deviation_fine: b.iter().map(|r| r.max_pointwise_deviation).collect(),
    })
}

/// Gap against deviation with the fitted and predicted lines.
pub fn family_plot(sweep: &FamilySweep) -> LogLogPlot {
    let points: Vec<(f64, f64)> = sweep.reports.iter().map(|r| (r.dev_lr, r.gap)).collect();
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let n = points.len() as f64;
    let tau = sweep.predicted.tau;
    let cfg = &sweep.config;
    LogLogPlot {
        title: format!(
            "N={} k={} alpha={} r={}",
            cfg.dim_n, cfg.k, cfg.alpha, cfg.r
        ),
        x_label: "||H-H0||_Lr".into(),
        y_label: "rho_e - rho_i".into(),
        points,
        lines: vec![
            PlotLine {
                label: format!("fit, slope {:.4}", sweep.fits.tau.slope),
                slope: sweep.fits.tau.slope,
                ln_intercept: sweep.fits.tau.intercept,
                dashed: false,
            },
            PlotLine {
                label: format!("predicted, slope {tau:.4}"),
                slope: tau,
                ln_intercept: (sy - tau * sx) / n,
                dashed: true,
            },
        ],
    }
}

#[derive(Debug, Clone)]
pub struct GnRow {
    pub fixture: &'static str,
    pub theta: f64,
    pub balanced: DilationCheck,
    /// Sweep with the mis-balanced exponent `2θ`.
    pub control: DilationCheck,
}

#[derive(Debug, Clone)]
pub struct GnRun {
    pub rows: Vec<GnRow>,
    /// `sin(ωx)` on one period, `j = 1`, `m = 2`, `p = 2`, `ε = 1/ω`.
    pub fourier_omega: f64,
    pub fourier_constant: f64,
    pub fourier_minimal_constant: f64,
    pub fourier_margin: f64,
    pub fourier_lhs: f64,
}

pub const FOURIER_OMEGA: f64 = 3.0;

pub fn gn_run() -> Result<GnRun> {
    let fixtures = standard_gn_fixtures();
    let rows = par_map(&fixtures, |fx| {
        let theta = gn_exponent(&fx.spec);
        Ok(GnRow {
            fixture: fx.name,
            theta,
            balanced: fx.sweep(theta).map_err(|e| e.at(fx.name))?,
            control: fx.sweep(2.0 * theta).map_err(|e| e.at(fx.name))?,
        })
    })?;
    let omega = FOURIER_OMEGA;
    let rule = composite_box_rule(std::f64::consts::PI, 1, 24, 8)?;
    let field = SineField { omega };
    let eps = 1.0 / omega;
    let constant = 0.5;
    Ok(GnRun {
        rows,
        fourier_omega: omega,
        fourier_constant: constant,
        fourier_minimal_constant: minimal_interpolation_constant(&field, &rule, 1, 2, 2.0, eps)?,
        fourier_margin: smoothness_interpolation_margin(&field, &rule, 1, 2, 2.0, eps, constant)?,
        fourier_lhs: -smoothness_interpolation_margin(&field, &rule, 1, 2, 2.0, eps, 0.0)?,
    })
}

pub const GN_BALANCE_TOLERANCE: f64 = 0.05;
pub const GN_CONTROL_THRESHOLD: f64 = 0.2;

pub fn gn_checks(run: &GnRun) -> Vec<Check> {
    let worst_balanced = run
        .rows
        .iter()
        .map(|r| r.balanced.slope.abs())
        .fold(0.0, f64::max);
    let weakest_control = run
        .rows
        .iter()
        .map(|r| r.control.slope.abs())
        .fold(f64::INFINITY, f64::min);
    vec![
        Check::new(
            "balanced dilation slope",
            worst_balanced <= GN_BALANCE_TOLERANCE,
            format!(
                "max |slope| {worst_balanced:.2e} over {} fixtures (tol {GN_BALANCE_TOLERANCE})",
                run.rows.len()
            ),
        ),
        Check::new(
            "mis-balanced control",
            weakest_control > GN_CONTROL_THRESHOLD,
            format!("min |slope| at 2*theta {weakest_control:.4} (needs > {GN_CONTROL_THRESHOLD})"),
        ),
        Check::new(
            "Fourier interpolation margin",
            run.fourier_margin >= -1e-12 * run.fourier_lhs,
            format!(
                "K = {} at eps = 1/{}: margin {:.3e}, minimal K {:.15}",
                run.fourier_constant,
                run.fourier_omega,
                run.fourier_margin,
                run.fourier_minimal_constant
            ),
        ),
    ]
}

#[derive(Debug, Clone)]
pub struct StereoRow {
    pub dim_n: usize,
    pub p: f64,
    pub ratios: Vec<f64>,
    pub constant: f64,
    /// Smallest slack of the pointwise derivative inequality over all
    /// fixtures and all chart nodes.
    pub min_slack: f64,
}

impl StereoRow {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// The constant, `x₁` and seeded random cubic polynomials.
pub fn stereo_fixtures(dim_n: usize, seed: u64) -> Vec<Box<dyn ScalarField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Box<dyn ScalarField>> = vec![
        Box::new(ConstantField {
            dim: dim_n,
            value: 1.0,
        }),
        Box::new(PolynomialField::coordinate(dim_n, 0)),
    ];
    for _ in 0..STEREO_RANDOM_FIXTURES {
        out.push(Box::new(PolynomialField::random(dim_n, 3, &mut rng)));
    }
    out
}

pub fn stereo_run(resolution: usize, seed: u64) -> Result<Vec<StereoRow>> {
    par_map(&STEREO_CASES, |&(n, p)| {
        let context = format!("N={n} p={p}");
        let chart = SphereChart::new(n)?;
        let rules = TransferRules::new(&chart, resolution)?;
        let fixtures = stereo_fixtures(n, seed.wrapping_add(n as u64));
        let mut ratios = Vec::with_capacity(fixtures.len());
        let mut min_slack = f64::INFINITY;
        for f in &fixtures {
            ratios.push(
                sobolev_transfer_ratio(f.as_ref(), p, &chart, &rules)
                    .map_err(|e| e.at(context.clone()))?,
            );
            for y in rules.flat.nodes() {
                let jet = chart_jet(f.as_ref(), y).map_err(|e| e.at(context.clone()))?;
                min_slack = min_slack.min(pointwise_derivative_slack(&jet, y));
            }
        }
        Ok(StereoRow {
            dim_n: n,
            p,
            ratios,
            constant: chart.transfer_constant(p),
            min_slack,
        })
    })
}

pub fn stereo_checks(rows: &[StereoRow]) -> Vec<Check> {
    let slack = rows
        .iter()
        .map(|r| r.min_slack)
        .fold(f64::INFINITY, f64::min);
    let mut out = vec![Check::new(
        "pointwise derivative inequality",
        slack >= -1e-10,
        format!("min slack {slack:.3e} on the transfer ball"),
    )];
    for r in rows {
        out.push(Check::new(
            format!("transfer ratio N={} p={}", r.dim_n, r.p),
            r.max_ratio() <= r.constant,
            format!(
                "max {:.4e} <= {:.4e} over {} fixtures",
                r.max_ratio(),
                r.constant,
                r.ratios.len()
            ),
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct TorsionRow {
    pub name: &'static str,
    pub mesh: TorsionMesh,
    pub identity: IdentityResidual,
    pub refined: IdentityResidual,
    pub hopf: HopfRatios,
    pub divergence_defect: f64,
    pub max_interior: f64,
    pub pde_residual: f64,
}

impl TorsionRow {
    /// Observed order of the identity residual under one refinement, or
    /// `None` when both residuals are at round-off.
    pub fn order(&self) -> Option<f64> {
        if self.identity.relative < ROUND_OFF_FLOOR && self.refined.relative < ROUND_OFF_FLOOR {
            None
        } else {
            Some((self.identity.relative / self.refined.relative).log2())
        }
    }

    pub fn is_disk(&self) -> bool {
        self.name == "disk"
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RoughRow {
    pub eps: f64,
    pub stability: RoughStability,
}

#[derive(Debug, Clone)]
pub struct TorsionRun {
    pub rows: Vec<TorsionRow>,
    pub r: f64,
    pub rough: Vec<RoughRow>,
}

pub fn torsion_fixtures() -> Result<Vec<(&'static str, RadialSurface)>> {
    Ok(vec![
        ("disk", disk(1.0)?),
        ("ellipse 1x1.1", ellipse(1.0, 1.1)?),
        ("ellipse 1x1.2", ellipse(1.0, 1.2)?),
        ("1+0.05cos3t", cosine_perturbed_circle(0.05, 3)?),
    ])
}

pub fn torsion_run(mesh: TorsionMesh, r: f64) -> Result<TorsionRun> {
    let fixtures = torsion_fixtures()?;
    let rows = par_map(&fixtures, |(name, domain)| {
        let inner = || -> Result<TorsionRow> {
            let sol = solve_torsion(domain, mesh)?;
            let fine = solve_torsion(domain, mesh.refined())?;
            Ok(TorsionRow {
                name,
                mesh,
                identity: fundamental_identity_residual(&sol),
                refined: fundamental_identity_residual(&fine),
                hopf: hopf_bounds_check(&sol)?,
                divergence_defect: sol.divergence_defect(),
                max_interior: sol.max_interior_value(),
                pde_residual: sol.pde_residual(),
            })
        };
        inner().map_err(|e| e.at(*name))
    })?;
    let rough = par_map(&ROUGH_EPSILONS, |&eps| {
        let domain = cosine_perturbed_circle(eps, 2)?;
        let sol = solve_torsion(&domain, mesh)?;
        Ok(RoughRow {
            eps,
            stability: rough_stability_check(&sol, r)?,
        })
    })?;
    Ok(TorsionRun { rows, r, rough })
}

pub fn torsion_checks(run: &TorsionRun) -> Vec<Check> {
    let mut out = Vec::new();
    for row in &run.rows {
        if row.is_disk() {
            out.push(Check::new(
                "disk identity residual",
                row.identity.absolute <= 1e-8,
                format!("|LHS - RHS| = {:.2e}", row.identity.absolute),
            ));
            out.push(Check::new(
                "disk Hopf ratio",
                row.hopf.quadratic >= 0.5 - 1e-6,
                format!("min -u/d^2 = {:.8}", row.hopf.quadratic),
            ));
        } else {
            out.push(Check::new(
                format!("identity residual {}", row.name),
                row.identity.relative <= 0.05,
                format!(
                    "relative {:.3e} (LHS {:.6e}, RHS {:.6e})",
                    row.identity.relative, row.identity.lhs, row.identity.rhs
                ),
            ));
            let (passed, detail) = match row.order() {
                None => (
                    true,
                    format!(
                        "at round-off ({:.1e}, {:.1e})",
                        row.identity.relative, row.refined.relative
                    ),
                ),
                Some(o) => (o >= 1.5, format!("observed order {o:.3}")),
            };
            out.push(Check::new(
                format!("identity convergence {}", row.name),
                passed,
                detail,
            ));
        }
        out.push(Check::new(
            format!("torsion solution {}", row.name),
            row.hopf.quadratic > 0.0
                && row.hopf.linear > 0.0
                && row.max_interior < 0.0
                && row.divergence_defect.abs() <= 5e-3,
            format!(
                "Hopf {:.4}/{:.4}, max u {:.2e}, flux defect {:.2e}",
                row.hopf.quadratic, row.hopf.linear, row.max_interior, row.divergence_defect
            ),
        ));
    }
    let ratios: Vec<f64> = run.rough.iter().map(|r| r.stability.ratio()).collect();
    let decreasing = ratios.iter().all(|r| r.is_finite()) && ratios.windows(2).all(|w| w[1] < w[0]);
    out.push(Check::new(
        "rough stability ratio",
        decreasing,
        format!(
            "LHS/RHS at eps {:?}: {}",
            ROUGH_EPSILONS,
            ratios
                .iter()
                .map(|r| format!("{r:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ));
    out
}

/// The unit sphere as a graph over the ball and as a radial graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereCalibration {
    pub dim_n: usize,
    /// Largest `|H − 1|` over graph nodes with `|x| ≤ 0.9`.
    pub graph_curvature_error: f64,
    /// Largest `|H − 1|` over sphere-rule directions.
    pub radial_curvature_error: f64,
    /// Largest `||p| − 1|` over all sampled surface points.
    pub radius_error: f64,
    pub gap: f64,
    pub h0_error: f64,
    pub dev_lr: f64,
    pub vol_dev: f64,
    pub per_dev: f64,
}

impl SphereCalibration {
    pub fn worst(&self) -> f64 {
        [
            self.graph_curvature_error,
            self.radial_curvature_error,
            self.radius_error,
            self.gap,
            self.h0_error,
            self.dev_lr,
            self.vol_dev,
            self.per_dev,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn sphere_calibration(dim_n: usize, r: f64) -> Result<SphereCalibration> {
    let graph = FamilySurface::unit_sphere(dim_n)?;
    let norm = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut graph_err = 0.0f64;
    let mut radius_err = 0.0f64;
    for x in ball_rule(dim_n - 1, 0.9, 6)?.nodes() {
        graph_err = graph_err.max((graph.mean_curvature(x)? - 1.0).abs());
        radius_err = radius_err.max((norm(&graph.cap().point(x)?) - 1.0).abs());
    }
    let radial = RadialSurface::sphere(vec![0.0; dim_n], 1.0)?;
    let mut radial_err = 0.0f64;
    for x in sphere_rule(dim_n, 6)?.nodes() {
        radial_err = radial_err.max((radial.mean_curvature(x)? - 1.0).abs());
        radius_err = radius_err.max((norm(&radial.point(x)?) - 1.0).abs());
    }
    let rules = FamilyRules::new(dim_n - 1, DEFAULT_CAP_RESOLUTION, false)?;
    let report = evaluate_family(&graph, r, &rules)?;
    Ok(SphereCalibration {
        dim_n,
        graph_curvature_error: graph_err,
        radial_curvature_error: radial_err,
        radius_error: radius_err,
        gap: report.gap,
        h0_error: report.h0_minus_one.abs(),
        dev_lr: report.dev_lr,
        vol_dev: report.vol_dev,
        per_dev: report.per_dev,
    })
}

/// Shape of the stability profile on a log-spaced deviation grid.
#[derive(Debug, Clone)]
pub struct ProfileRun {
    pub regime: Regime,
    pub tau: Option<f64>,
    pub points: Vec<(f64, f64)>,
}

pub fn profile_run(cfg: &ExperimentConfig) -> Result<ProfileRun> {
    let points = (0..=40)
        .map(|i| {
            let eps = 10f64.powf(-8.0 + 8.0 * i as f64 / 40.0);
            Ok((eps, profile_bound(cfg.dim_n, cfg.k, cfg.alpha, cfg.r, eps)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let regime = regime(cfg.dim_n, cfg.r);
    let tau = match regime {
        Regime::Power => Some(stability_exponent(cfg.dim_n, cfg.k, cfg.alpha, cfg.r)?),
        _ => None,
    };
    Ok(ProfileRun {
        regime,
        tau,
        points,
    })
}

/// Checks, summary lines and written files of one run.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub mode: ExperimentMode,
    pub summary: Vec<String>,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Output {
    dir: Option<PathBuf>,
    files: Vec<PathBuf>,
}

impl Output {
    fn file(&mut self, name: &str, write: impl FnOnce(fs::File) -> Result<()>) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            let f = fs::File::create(&path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            write(f)?;
            self.files.push(path);
        }
        Ok(())
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        self.file(name, |f| write_table(f, header, rows))
    }
}

fn fit_row(name: &str, f: &ScalingFit) -> Vec<String> {
    vec![
        name.to_owned(),
        format_f64(f.slope),
        format_f64(f.intercept),
        format_f64(f.r_squared),
        format_f64(f.predicted),
        format_f64(f.relative_error),
        f.excluded_largest.to_string(),
    ]
}

/// Runs the configured experiment, writes its tables and plot into
/// `out_dir` when set, and returns the per-criterion checks.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    let mut out = Output {
        dir: cfg.out_dir.clone(),
        files: Vec::new(),
    };
    let mut summary = Vec::new();
    let checks = match cfg.mode {
        ExperimentMode::Family => {
            let sweep = family_sweep(cfg)?;
            summary.push(format!(
                "family N={} k={} alpha={} r={} singular={} resolution={} t in [{:.4e}, {:.4e}] ({} points)",
                cfg.dim_n,
                cfg.k,
                cfg.alpha,
                cfg.r,
                cfg.singular,
                sweep.resolution,
                sweep.reports[0].t,
                sweep.reports.last().unwrap().t,
                sweep.reports.len()
            ));
            let rows: Vec<FamilyRow> = sweep.reports.iter().map(FamilyRow::from).collect();
            out.file("family.csv", |f| write_family_csv(f, &rows))?;
            let fits = &sweep.fits;
            out.table(
                "family_fits.csv",
                &[
                    "quantity",
                    "slope",
                    "intercept",
                    "r_squared",
                    "predicted",
                    "relative_error",
                    "excluded_largest",
                ],
                &[
                    fit_row("gap_vs_dev", &fits.tau),
                    fit_row("dev_Lr", &fits.dev),
                    fit_row("gap", &fits.gap),
                    fit_row("vol_dev", &fits.vol),
                    fit_row("per_dev", &fits.per),
                ],
            )?;
            let svg = family_plot(&sweep).to_svg()?;
            out.file("family.svg", |mut f| {
                Ok(std::io::Write::write_all(&mut f, svg.as_bytes())?)
            })?;
            let mut checks = family_checks(&sweep);
            if cfg.singular {
                let refinement = family_refinement(cfg)?;
                checks.push(Check::new(
                    "singular refinement",
                    refinement.max_relative_change <= 0.03 && refinement.max_grows(),
                    format!(
                        "dev_Lr moves {:.3}% from resolution {} to {}; sampled max grows: {}",
                        100.0 * refinement.max_relative_change,
                        refinement.coarse,
                        refinement.fine,
                        refinement.max_grows()
                    ),
                ));
            }
            checks
        }
        ExperimentMode::Gn => {
            let run = gn_run()?;
            let mut rows = Vec::new();
            for row in &run.rows {
                for (kind, sweep) in [("balanced", &row.balanced), ("control", &row.control)] {
                    for (l, p) in sweep.lambdas.iter().zip(&sweep.products) {
                        rows.push(vec![
                            row.fixture.to_owned(),
                            kind.to_owned(),
                            format_f64(sweep.theta),
                            format_f64(*l),
                            format_f64(*p),
                        ]);
                    }
                }
                summary.push(format!(
                    "{}: theta {:.4}, balanced slope {:.2e}, control slope {:.4}",
                    row.fixture, row.theta, row.balanced.slope, row.control.slope
                ));
            }
            out.table(
                "gn.csv",
                &["fixture", "kind", "theta", "lambda", "product"],
                &rows,
            )?;
            gn_checks(&run)
        }
        ExperimentMode::Stereo => {
            let rows = stereo_run(
                cfg.resolution.unwrap_or(DEFAULT_STEREO_RESOLUTION),
                cfg.seed,
            )?;
            let mut table = Vec::new();
            for row in &rows {
                for (i, ratio) in row.ratios.iter().enumerate() {
                    table.push(vec![
                        row.dim_n.to_string(),
                        format_f64(row.p),
                        i.to_string(),
                        format_f64(*ratio),
                        format_f64(row.constant),
                    ]);
                }
                summary.push(format!(
                    "N={} p={}: max ratio {:.4e}, constant {:.4e}",
                    row.dim_n,
                    row.p,
                    row.max_ratio(),
                    row.constant
                ));
            }
            out.table(
                "stereo.csv",
                &["N", "p", "fixture", "ratio", "constant"],
                &table,
            )?;
            stereo_checks(&rows)
        }
        ExperimentMode::Torsion => {
            let mesh = cfg.torsion_mesh()?;
            let run = torsion_run(mesh, cfg.r)?;
            let table: Vec<Vec<String>> = run
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.name.to_owned(),
                        r.mesh.radial.to_string(),
                        r.mesh.angular.to_string(),
                        format_f64(r.identity.lhs),
                        format_f64(r.identity.rhs),
                        format_f64(r.identity.relative),
                        format_f64(r.identity.absolute),
                        format_f64(r.refined.relative),
                        r.order().map_or("round-off".to_owned(), format_f64),
                        format_f64(r.hopf.quadratic),
                        format_f64(r.hopf.linear),
                        format_f64(r.divergence_defect),
                    ]
                })
                .collect();
            out.table(
                "torsion.csv",
                &[
                    "domain",
                    "radial",
                    "angular",
                    "lhs",
                    "rhs",
                    "relative",
                    "absolute",
                    "refined_relative",
                    "order",
                    "hopf_quadratic",
                    "hopf_linear",
                    "divergence_defect",
                ],
                &table,
            )?;
            let rough: Vec<Vec<String>> = run
                .rough
                .iter()
                .map(|r| {
                    [
                        r.eps,
                        run.r,
                        r.stability.lhs,
                        r.stability.rhs,
                        r.stability.ratio(),
                    ]
                    .iter()
                    .map(|v| format_f64(*v))
                    .collect()
                })
                .collect();
            out.table("rough.csv", &["eps", "r", "lhs", "rhs", "ratio"], &rough)?;
            summary.push(format!(
                "torsion mesh {}x{}, rough stability r = {}",
                mesh.radial, mesh.angular, run.r
            ));
            torsion_checks(&run)
        }
        ExperimentMode::Profile => {
            let run = profile_run(cfg)?;
            let rows: Vec<Vec<String>> = run
                .points
                .iter()
                .map(|(e, b)| vec![format_f64(*e), format_f64(*b)])
                .collect();
            out.table("profile.csv", &["eps", "bound"], &rows)?;
            summary.push(format!(
                "profile N={} k={} alpha={} r={}: regime {:?}{}",
                cfg.dim_n,
                cfg.k,
                cfg.alpha,
                cfg.r,
                run.regime,
                run.tau.map_or(String::new(), |t| format!(", tau = {t:.6}"))
            ));
            let monotone = run.points.windows(2).all(|w| w[1].1 >= w[0].1);
            vec![Check::new(
                "profile monotone",
                monotone,
                format!("{} grid points", run.points.len()),
            )]
        }
    };
    let mut text: String = summary.iter().map(|l| format!("{l}\n")).collect();
    for c in &checks {
        text.push_str(&format!("{c}\n"));
    }
    out.file("summary.txt", |mut f| {
        Ok(std::io::Write::write_all(&mut f, text.as_bytes())?)
    })?;
    Ok(ExperimentOutcome {
        mode: cfg.mode,
        summary,
        checks,
        files: out.files,
    })
}

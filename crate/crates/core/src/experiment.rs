//! Stability exponent, the stability profile and log-log scaling fits.

use crate::error::{Error, Result};

/// Hypotheses shared by the exponent and the profile: `r > 1`,
/// `r ≥ (2N−2)/(N+1)`, `N ≥ 2`, `k ≥ 1`, `α ∈ (0, 1]`.
pub(crate) fn check_hypothesis(dim_n: usize, k: u32, alpha: f64, r: f64) -> Result<()> {
    if dim_n < 2 {
        return Err(Error::Hypothesis(format!("N must be >= 2, got {dim_n}")));
    }
    if k < 1 || !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Hypothesis(format!(
            "need k >= 1 and alpha in (0,1], got k={k}, alpha={alpha}"
        )));
    }
    let nf = dim_n as f64;
    if !(r > 1.0) || !r.is_finite() || r < (2.0 * nf - 2.0) / (nf + 1.0) {
        return Err(Error::Hypothesis(format!(
            "r = {r} must satisfy r > 1 and r >= (2N-2)/(N+1) = {}",
            (2.0 * nf - 2.0) / (nf + 1.0)
        )));
    }
    Ok(())
}

/// Regime of the stability profile, decided by `r` against `(N−1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Linear,
    Logarithmic,
    Power,
}

/// Relative tolerance used to detect the critical exponent `r = (N−1)/2`.
const CRITICAL_TOL: f64 = 1e-12;

pub fn regime(dim_n: usize, r: f64) -> Regime {
    let critical = (dim_n as f64 - 1.0) / 2.0;
    if (r - critical).abs() <= CRITICAL_TOL * critical {
        Regime::Logarithmic
    } else if r > critical {
        Regime::Linear
    } else {
        Regime::Power
    }
}

/// `τ = (k+α) / (k+α + (N−1−2r)/r)`, defined in the power regime
/// `r < (N−1)/2`.
pub fn stability_exponent(dim_n: usize, k: u32, alpha: f64, r: f64) -> Result<f64> {
    check_hypothesis(dim_n, k, alpha, r)?;
    if regime(dim_n, r) != Regime::Power {
        return Err(Error::Hypothesis(format!(
            "r = {r} is not below (N-1)/2 = {}; use the profile bound",
            (dim_n as f64 - 1.0) / 2.0
        )));
    }
    let p = k as f64 + alpha;
    Ok(p / (p + (dim_n as f64 - 1.0 - 2.0 * r) / r))
}

/// Shape of the stability bound in terms of the deviation `ε` (constant
/// excluded): `ε` above the critical exponent, `ε·max{log(1/ε)/(k+α), 1}`
/// at it, `ε^τ` below it.
pub fn profile_bound(dim_n: usize, k: u32, alpha: f64, r: f64, eps: f64) -> Result<f64> {
    check_hypothesis(dim_n, k, alpha, r)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive and finite, got {eps}"
        )));
    }
    Ok(match regime(dim_n, r) {
        Regime::Linear => eps,
        Regime::Logarithmic => eps * ((1.0 / eps).ln() / (k as f64 + alpha)).max(1.0),
        Regime::Power => eps.powf(stability_exponent(dim_n, k, alpha, r)?),
    })
}

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn line_fit(lx: &[f64], ly: &[f64]) -> Result<LineFit> {
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my) * (b - my)).sum();
    let sxy: f64 = lx.iter().zip(ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 1e-24 * n) {
        return Err(Error::Degenerate("x values have no spread".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

fn logs(pairs: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>)> {
    if pairs.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 pairs, got {}",
            pairs.len()
        )));
    }
    if pairs
        .iter()
        .any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::Domain(
            "log-log fit needs positive finite data".into(),
        ));
    }
    let increasing = pairs.windows(2).all(|w| w[1].0 > w[0].0);
    let decreasing = pairs.windows(2).all(|w| w[1].0 < w[0].0);
    if !(increasing || decreasing) {
        return Err(Error::InvalidParameter(
            "x must be strictly monotone".into(),
        ));
    }
    Ok(pairs.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip())
}

/// Plain least-squares fit of `log y` against `log x`.
pub fn fit_loglog(pairs: &[(f64, f64)]) -> Result<LineFit> {
    let (lx, ly) = logs(pairs)?;
    line_fit(&lx, &ly)
}

/// A fitted scaling exponent compared with its prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub predicted: f64,
    pub relative_error: f64,
    /// Whether the point with the largest `t` was dropped from the fit.
    pub excluded_largest: bool,
}

impl ScalingFit {
    /// Fits `pairs` ordered by increasing `t`. The last pair (largest `t`)
    /// is dropped when its residual exceeds twice the median residual.
    pub fn compare(pairs: &[(f64, f64)], predicted: f64) -> Result<Self> {
        let (lx, ly) = logs(pairs)?;
        let full = line_fit(&lx, &ly)?;
        let mut residuals: Vec<f64> = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| (y - full.intercept - full.slope * x).abs())
            .collect();
        let last = *residuals.last().unwrap();
        residuals.sort_by(f64::total_cmp);
        let mid = residuals.len() / 2;
        let median = if residuals.len().is_multiple_of(2) {
            0.5 * (residuals[mid - 1] + residuals[mid])
        } else {
            residuals[mid]
        };
        let exclude = last > 2.0 * median;
        let fit = if exclude {
            let n = lx.len() - 1;
            line_fit(&lx[..n], &ly[..n])?
        } else {
            full
        };
        Ok(Self {
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            predicted,
            relative_error: (fit.slope - predicted).abs() / predicted.abs(),
            excluded_largest: exclude,
        })
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.relative_error <= tolerance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponent_examples() {
        assert!((stability_exponent(6, 1, 1.0, 2.0).unwrap() - 0.8).abs() < 1e-15);
        assert!((stability_exponent(6, 2, 1.0, 2.0).unwrap() - 6.0 / 7.0).abs() < 1e-15);
        assert!((stability_exponent(5, 2, 1.0, 1.6).unwrap() - 3.0 / 3.5).abs() < 1e-15);
        assert!((stability_exponent(7, 1, 1.0, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(stability_exponent(5, 2, 1.0, 2.0).is_err());
        assert!(stability_exponent(6, 2, 1.0, 1.0).is_err());
        assert!(stability_exponent(9, 2, 1.0, 1.5).is_err());
    }

    #[test]
    fn exponent_limits_and_continuity() {
        let big = stability_exponent(6, 400, 1.0, 2.0).unwrap();
        assert!(1.0 - big < 2e-3);
        let lhs = stability_exponent(6, 3, 1e-12, 2.0).unwrap();
        let rhs = stability_exponent(6, 2, 1.0, 2.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-11);
    }

    #[test]
    fn exponent_monotone_on_grid() {
        for n in 4..10 {
            let lo = ((2.0 * n as f64 - 2.0) / (n as f64 + 1.0)).max(1.0) + 1e-3;
            let hi = (n as f64 - 1.0) / 2.0 - 1e-3;
            let mut prev_r = 0.0;
            for i in 0..20 {
                let r = lo + (hi - lo) * i as f64 / 19.0;
                let tau = stability_exponent(n, 1, 0.5, r).unwrap();
                assert!(tau > prev_r && tau < 1.0);
                prev_r = tau;
                let mut prev_p = 0.0;
                for (k, a) in [(1, 0.2), (1, 0.7), (2, 0.1), (2, 1.0), (3, 0.5)] {
                    let tau = stability_exponent(n, k, a, r).unwrap();
                    assert!(tau > prev_p);
                    prev_p = tau;
                }
            }
        }
    }

    #[test]
    fn profile_regimes() {
        assert_eq!(regime(3, 1.2), Regime::Linear);
        assert_eq!(profile_bound(3, 1, 1.0, 1.2, 0.3).unwrap(), 0.3);
        let eps = (-3.0f64).exp();
        let v = profile_bound(5, 2, 1.0, 2.0, eps).unwrap();
        assert!((v - eps).abs() < 1e-15);
        let v = profile_bound(6, 2, 1.0, 2.0, 1e-3).unwrap();
        assert!((v - 1e-3f64.powf(6.0 / 7.0)).abs() < 1e-15);
        assert!(profile_bound(5, 2, 1.0, 2.0, 0.0).is_err());
        assert!(profile_bound(9, 2, 1.0, 1.5, 0.1).is_err());
    }

    #[test]
    fn profile_monotone_and_continuous() {
        for (n, k, a, r) in [
            (3, 1, 1.0, 1.5),
            (5, 1, 0.5, 2.0),
            (5, 3, 1.0, 2.0),
            (6, 2, 1.0, 2.0),
            (8, 1, 0.3, 2.5),
        ] {
            let mut prev = 0.0;
            for i in 1..=2000 {
                let eps = i as f64 / 2000.0;
                let v = profile_bound(n, k, a, r, eps).unwrap();
                assert!(v >= prev, "N={n} k={k} eps={eps}");
                if i > 1 {
                    assert!(v - prev < 0.02);
                }
                prev = v;
            }
        }
    }

    #[test]
    fn fit_exact_power() {
        let pairs: Vec<(f64, f64)> = (1..8).map(|i| (i as f64, (i * i) as f64)).collect();
        let f = fit_loglog(&pairs).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-13);
        assert!((f.r_squared - 1.0).abs() < 1e-13);
    }

    #[test]
    fn fit_noisy_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pairs: Vec<(f64, f64)> = (0..16)
            .map(|i| {
                let x = 1e-3 * 1.6f64.powi(i);
                (
                    x,
                    3.0 * x.powf(0.8) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let f = ScalingFit::compare(&pairs, 0.8).unwrap();
        assert!((f.slope - 0.8).abs() < 0.02);
        assert!(f.within(0.05));
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, -2.0), (3.0, 3.0), (4.0, 1.0)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (3.0, 2.0), (2.0, 3.0), (4.0, 1.0)]).is_err());
    }

    #[test]
    fn exclusion_of_contaminated_last_point() {
        let mut pairs: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, (i as f64).powi(3))).collect();
        pairs.last_mut().unwrap().1 *= 3.0;
        let f = ScalingFit::compare(&pairs, 3.0).unwrap();
        assert!(f.excluded_largest);
        assert!((f.slope - 3.0).abs() < 1e-12);
        let clean: Vec<(f64, f64)> = (1..10)
            .map(|i| (i as f64, (i as f64).powi(3) * (1.0 + 1e-3 * (i % 3) as f64)))
            .collect();
        assert!(!ScalingFit::compare(&clean, 3.0).unwrap().excluded_largest);
    }
}

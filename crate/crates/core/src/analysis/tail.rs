use super::{linear_fit, Domain, ManufacturedCase, PreparedCase, SiteCount};
use crate::error::{invalid_arg, Result};
use crate::observations::NoiseModel;

/// Quantile range over which the survival function is fitted.
const FIT_QUANTILES: (f64, f64) = (0.5, 0.99);

/// One point of the empirical survival function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    /// Error threshold relative to the median.
    pub z: f64,
    /// Fraction of trials whose error exceeds `z · median`.
    pub survival: f64,
    pub log_survival: f64,
}

/// Least-squares fit `ln S(z) ≈ a − b z²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub a: f64,
    pub b: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    /// Per-trial `L²` errors in seed order.
    pub samples: Vec<f64>,
    pub median: f64,
    pub p99: f64,
    /// All samples coincide, so there is no tail to fit.
    pub deterministic: bool,
    pub points: Vec<TailPoint>,
    pub fit: Option<TailFit>,
}

impl TailReport {
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        let t = samples.len();
        if t < 2 {
            return invalid_arg("a tail study needs at least two samples");
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return invalid_arg("error samples must be finite");
        }
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let median = if t % 2 == 1 { sorted[t / 2] } else { 0.5 * (sorted[t / 2 - 1] + sorted[t / 2]) };
        let p99 = sorted[((FIT_QUANTILES.1 * t as f64).ceil() as usize).clamp(1, t) - 1];
        let spread = sorted[t - 1] - sorted[0];
        if spread <= 1e-12 * sorted[t - 1].abs() || median == 0.0 {
            return Ok(Self { samples, median, p99, deterministic: true, points: Vec::new(), fit: None });
        }

        // order statistic j (1-based) is exceeded by a fraction (T − j)/T of the trials
        let lo = ((FIT_QUANTILES.0 * t as f64).ceil() as usize).max(1);
        let hi = ((FIT_QUANTILES.1 * t as f64).floor() as usize).min(t - 1);
        let points: Vec<TailPoint> = (lo..=hi)
            .map(|j| {
                let survival = (t - j) as f64 / t as f64;
                TailPoint { z: sorted[j - 1] / median, survival, log_survival: survival.ln() }
            })
            .collect();
        let fit = (points.len() >= 3).then(|| {
            let x: Vec<f64> = points.iter().map(|p| p.z * p.z).collect();
            let y: Vec<f64> = points.iter().map(|p| p.log_survival).collect();
            let (a, slope, r2) = linear_fit(&x, &y);
            TailFit { a, b: -slope, r2 }
        });
        Ok(Self { samples, median, p99, deterministic: false, points, fit })
    }

    pub fn p99_over_median(&self) -> f64 {
        self.p99 / self.median
    }
}

/// Runs `trials` realisations with seeds `seed0 ..` at one `(h, n)` and
/// summarises the distribution of the `L²` error.
pub fn tail_study(
    domain: Domain,
    h: f64,
    sites: SiteCount,
    noise: NoiseModel,
    trials: usize,
    seed0: u64,
) -> Result<TailReport> {
    if trials < 100 {
        return invalid_arg(format!("a tail study needs at least 100 trials, got {trials}"));
    }
    noise.validate()?;
    let n = sites.for_h(h)?;
    let prepared = PreparedCase::new(domain, h, n, ManufacturedCase::sine())?;
    let (reports, _) = prepared.run_trials(noise, trials, seed0)?;
    TailReport::from_samples(reports.into_iter().map(|r| r.l2).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_are_deterministic() {
        let r = TailReport::from_samples(vec![0.25; 100]).unwrap();
        assert!(r.deterministic && r.fit.is_none() && r.points.is_empty());
        assert_eq!(r.median, 0.25);
    }

    #[test]
    fn survival_is_non_increasing_and_gaussian_tail_fits() {
        // half-normal quantiles: |Z| has an exactly Gaussian tail
        let t = 400;
        let samples: Vec<f64> = (1..=t)
            .map(|k| {
                let p = (k as f64 - 0.5) / t as f64;
                inverse_half_normal(p)
            })
            .collect();
        let r = TailReport::from_samples(samples).unwrap();
        assert!(r.points.windows(2).all(|w| w[1].survival <= w[0].survival && w[1].z >= w[0].z));
        let fit = r.fit.unwrap();
        assert!(fit.b > 0.0 && fit.r2 > 0.95, "{fit:?}");
        assert!(r.p99_over_median() < 5.0);
    }

    #[test]
    fn too_few_trials_rejected() {
        let r = tail_study(Domain::Square, 0.25, SiteCount::Exponent(2), NoiseModel::None, 10, 0);
        assert!(r.is_err());
    }

    // bisection on erf, adequate for test data
    fn inverse_half_normal(p: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if erf(mid / std::f64::consts::SQRT_2) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn erf(x: f64) -> f64 {
        // Abramowitz-Stegun 7.1.26
        let t = 1.0 / (1.0 + 0.327_591_1 * x);
        1.0 - (((((1.061_405_429 * t - 1.453_152_027) * t) + 1.421_413_741) * t - 0.284_496_736) * t
                + 0.254_829_592)
                * t
                * (-x * x).exp()
    }
}

use std::fmt;

use crate::error::{invalid_arg, Result};

/// A fitted convergence rate, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq)]
pub enum Rate {
    Value(f64),
    Undefined(String),
}

impl Rate {
    pub fn value(&self) -> Option<f64> {
        match self {
            Rate::Value(v) => Some(*v),
            Rate::Undefined(_) => None,
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Value(v) => write!(f, "{v:.4}"),
            Rate::Undefined(why) => write!(f, "undefined ({why})"),
        }
    }
}

/// Rates of one error sequence, with the sign convention that negative means
/// convergence: `e ∝ h^{-rate}` read off as the slope of `ln e` against
/// `ln(1/h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// `ln(e_last / e_first) / ln(h_first / h_last)`
    pub endpoint: Rate,
    /// Least-squares slope of `ln e` against `ln(1/h)` over all levels.
    pub least_squares: Rate,
    /// Endpoint rate of each consecutive pair of levels.
    pub steps: Vec<Rate>,
}

fn endpoint(h0: f64, e0: f64, h1: f64, e1: f64) -> Rate {
    if e0 == 0.0 || e1 == 0.0 {
        Rate::Undefined("zero error".into())
    } else {
        Rate::Value((e1 / e0).ln() / (h0 / h1).ln())
    }
}

/// Fits rates to errors `e` observed at mesh sizes `h`.
pub fn estimate_rates(h: &[f64], e: &[f64]) -> Result<RateEstimate> {
    if h.len() != e.len() {
        return invalid_arg("mesh sizes and errors differ in length");
    }
    if h.len() < 2 {
        return invalid_arg("a rate needs at least two levels");
    }
    if h.iter().any(|&x| !(x > 0.0)) || e.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return invalid_arg("mesh sizes must be positive and errors finite and non-negative");
    }
    if h.windows(2).any(|w| w[0] == w[1]) {
        return invalid_arg("mesh sizes must be distinct");
    }
    let last = h.len() - 1;
    let steps = (0..last).map(|k| endpoint(h[k], e[k], h[k + 1], e[k + 1])).collect();
    let least_squares = if e.contains(&0.0) {
        Rate::Undefined("zero error".into())
    } else {
        let x: Vec<f64> = h.iter().map(|h| -h.ln()).collect();
        let y: Vec<f64> = e.iter().map(|e| e.ln()).collect();
        Rate::Value(linear_fit(&x, &y).1)
    };
    Ok(RateEstimate { endpoint: endpoint(h[0], e[0], h[last], e[last]), least_squares, steps })
}

/// Ordinary least squares `y ≈ a + b x`, returning `(a, b, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = x.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (a, b, r2)
}

/// Mean and sample standard deviation with Neumaier summation, so the result
/// does not depend on how the samples were produced.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    let ss = compensated_sum(values.iter().map(|v| (v - mean).powi(2)));
    (mean, (ss / (n - 1) as f64).sqrt())
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_endpoint_rates() {
        let r = estimate_rates(&[0.1, 0.0125], &[0.3978, 0.1394]).unwrap();
        assert!((r.endpoint.value().unwrap() - (0.1394f64 / 0.3978).ln() / 8f64.ln()).abs() < 1e-15);
        assert!((r.endpoint.value().unwrap() + 0.5043).abs() < 1e-3);
        let r = estimate_rates(&[0.1, 0.0125], &[0.0380, 6.3816e-4]).unwrap();
        assert!((r.endpoint.value().unwrap() + 1.9656).abs() < 1e-3);
    }

    #[test]
    fn exact_power_law() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h).collect();
        let r = estimate_rates(&h, &e).unwrap();
        assert!((r.least_squares.value().unwrap() + 2.0).abs() < 1e-12);
        assert!((r.endpoint.value().unwrap() + 2.0).abs() < 1e-12);
        assert!(r.steps.iter().all(|s| (s.value().unwrap() + 2.0).abs() < 1e-12));
    }

    #[test]
    fn zero_error_is_undefined() {
        let r = estimate_rates(&[0.1, 0.05], &[0.0, 1e-3]).unwrap();
        assert!(matches!(r.endpoint, Rate::Undefined(_)));
        assert!(matches!(r.least_squares, Rate::Undefined(_)));
        assert!(estimate_rates(&[0.1], &[1.0]).is_err());
    }

    #[test]
    fn compensated_mean() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}

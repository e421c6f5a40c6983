use rand::{RngExt, SeedableRng};
use rand_distr::StandardNormal;
use rand_pcg::Pcg64Mcg;

use crate::error::{invalid_arg, Result};

/// Distribution of the additive measurement errors. Every variant has mean zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    /// Normal errors with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// With probability `p` a draw from `N(0, sigma1²)`, otherwise from `N(0, sigma2²)`.
    GaussianMixture { sigma1: f64, sigma2: f64, p: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let ok = |s: f64| s.is_finite() && s >= 0.0;
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Gaussian { sigma } if ok(sigma) => Ok(()),
            NoiseModel::GaussianMixture { sigma1, sigma2, p }
                if ok(sigma1) && ok(sigma2) && (0.0..=1.0).contains(&p) =>
            {
                Ok(())
            }
            other => invalid_arg(format!("invalid noise model {other:?}")),
        }
    }

    /// Standard deviation of a single error.
    pub fn std_dev(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { sigma } => sigma,
            NoiseModel::GaussianMixture { sigma1, sigma2, p } => {
                (p * sigma1 * sigma1 + (1.0 - p) * sigma2 * sigma2).sqrt()
            }
        }
    }

    pub fn is_none(&self) -> bool {
        self.std_dev() == 0.0
    }

    /// Error at measurement `index` for the realisation labelled `seed`.
    ///
    /// The value depends only on `(seed, index)`, so sites can be visited in
    /// any order or in parallel without changing the realisation.
    pub fn sample(&self, seed: u64, index: u64) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { sigma } => {
                let z: f64 = site_rng(seed, index).sample(StandardNormal);
                sigma * z
            }
            NoiseModel::GaussianMixture { sigma1, sigma2, p } => {
                let mut rng = site_rng(seed, index);
                let pick: f64 = rng.random();
                let z: f64 = rng.sample(StandardNormal);
                if pick < p {
                    sigma1 * z
                } else {
                    sigma2 * z
                }
            }
        }
    }
}

/// `count` i.i.d. errors for realisation `seed`.
pub fn sample_noise(model: &NoiseModel, count: usize, seed: u64) -> Vec<f64> {
    (0..count as u64).map(|i| model.sample(seed, i)).collect()
}

/// Per-site generator keyed by `(seed, index)`.
pub(crate) fn site_rng(seed: u64, index: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(mix(seed) ^ index)
}

// splitmix64 finaliser
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

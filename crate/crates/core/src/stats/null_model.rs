use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::covariance::{estimate_covariance, CovarianceScalars, CovarianceSummary};
use super::divergence::expected_js;
use super::flips::{flip_stats, FlipStats};
use super::noise::{estimate_sigma, NoiseSample};
use crate::error::{Error, Result};

/// Every estimator evaluated on synthetic `N(0, sigma^2 I)` noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NullBaseline {
    /// The sigma the noise was drawn with; predictions use this value.
    pub sigma: f64,
    /// RMSE re-estimated from the synthetic draws.
    pub sigma_estimated: f64,
    pub flip_stats: FlipStats,
    pub expected_js: f64,
    pub covariance: CovarianceSummary,
}

/// Report-sized view of a [`NullBaseline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullBaselineSummary {
    pub sigma: f64,
    pub sigma_estimated: f64,
    pub n_draws: usize,
    pub empirical_flip_rate: f64,
    pub flips: usize,
    pub predicted_flip_rate: Option<f64>,
    pub expected_js: f64,
    pub covariance: CovarianceScalars,
}

impl NullBaseline {
    pub fn n_draws(&self) -> usize {
        self.flip_stats.n_trials
    }

    pub fn summary(&self) -> NullBaselineSummary {
        NullBaselineSummary {
            sigma: self.sigma,
            sigma_estimated: self.sigma_estimated,
            n_draws: self.n_draws(),
            empirical_flip_rate: self.flip_stats.empirical_rate,
            flips: self.flip_stats.flips,
            predicted_flip_rate: self.flip_stats.predicted_rate,
            expected_js: self.expected_js,
            covariance: self.covariance.scalars(),
        }
    }
}

/// Perturbs ideal outputs with i.i.d. Gaussian noise and runs every estimator on the result.
///
/// Draw `i` perturbs `y_list[i % y_list.len()]`. The generator is a single
/// seeded stream consumed in draw order.
pub fn simulate_iid_null(y_list: &[Vec<f64>], sigma: f64, seed: u64, n_draws: usize) -> Result<NullBaseline> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::DegenerateSigma(sigma));
    }
    if n_draws < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: n_draws,
        });
    }
    if y_list.is_empty() {
        return Err(Error::Empty("ideal output list"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_draws);
    for i in 0..n_draws {
        let y = &y_list[i % y_list.len()];
        let eta: Vec<f64> = (0..y.len())
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            })
            .collect();
        samples.push(NoiseSample::from_noise(y.clone(), &eta)?);
    }
    Ok(NullBaseline {
        sigma,
        sigma_estimated: estimate_sigma(&samples)?,
        flip_stats: flip_stats(&samples, sigma)?,
        expected_js: expected_js(&samples)?,
        covariance: estimate_covariance(&samples)?,
    })
}

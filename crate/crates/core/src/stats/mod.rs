//! Estimators for the noise between an ideal and a perturbed logit vector.

pub mod covariance;
mod divergence;
mod flips;
mod noise;
mod normal;
pub mod null_model;

pub use covariance::{estimate_covariance, off_diagonal_ratio, CovarianceScalars, CovarianceSummary};
pub use divergence::{expected_js, js_divergence, softmax};
pub use flips::{
    argmax, binomial_standard_error, empirical_flip_rate, flip_stats, logit_margin, predicted_flip_rate, FlipStats,
};
pub use noise::{estimate_sigma, NoiseSample};
pub use normal::normal_cdf;
pub use null_model::{simulate_iid_null, NullBaseline, NullBaselineSummary};

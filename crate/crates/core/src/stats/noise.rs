use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trial's ideal output `y`, perturbed output `y_tilde`, and their difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSample {
    y: Vec<f64>,
    y_tilde: Vec<f64>,
    eta: Vec<f64>,
}

impl NoiseSample {
    pub fn new(y: Vec<f64>, y_tilde: Vec<f64>) -> Result<Self> {
        if y.len() != y_tilde.len() {
            return Err(Error::LengthMismatch {
                left: y.len(),
                right: y_tilde.len(),
            });
        }
        if y.is_empty() {
            return Err(Error::Empty("logit vector"));
        }
        let eta = y_tilde.iter().zip(&y).map(|(t, r)| t - r).collect();
        Ok(Self { y, y_tilde, eta })
    }

    /// Builds a sample from an ideal output and an additive perturbation.
    pub fn from_noise(y: Vec<f64>, eta: &[f64]) -> Result<Self> {
        if y.len() != eta.len() {
            return Err(Error::LengthMismatch {
                left: y.len(),
                right: eta.len(),
            });
        }
        let y_tilde = y.iter().zip(eta).map(|(a, b)| a + b).collect();
        Self::new(y, y_tilde)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_tilde(&self) -> &[f64] {
        &self.y_tilde
    }

    /// `y_tilde - y`, elementwise.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Number of logits.
    pub fn k(&self) -> usize {
        self.y.len()
    }

    pub fn is_noiseless(&self) -> bool {
        self.eta.iter().all(|&e| e == 0.0)
    }
}

/// Checks that all samples share one logit count and returns it.
pub(crate) fn common_k(samples: &[NoiseSample]) -> Result<usize> {
    let first = samples.first().ok_or(Error::Empty("sample list"))?;
    let k = first.k();
    for s in samples {
        if s.k() != k {
            return Err(Error::DimensionMismatch {
                what: "logit count",
                expected: k,
                actual: s.k(),
            });
        }
    }
    Ok(k)
}

/// Pooled root-mean-square noise over every logit of every trial, without centering.
pub fn estimate_sigma(samples: &[NoiseSample]) -> Result<f64> {
    let k = common_k(samples)?;
    let sum_sq: f64 = samples
        .iter()
        .map(|s| s.eta.iter().map(|e| e * e).sum::<f64>())
        .sum();
    Ok((sum_sq / (samples.len() as f64 * k as f64)).sqrt())
}

use serde::{Deserialize, Serialize};

use super::noise::{common_k, NoiseSample};
use super::normal::normal_cdf;
use crate::error::{Error, Result};

/// Index of the largest logit; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in v.iter().enumerate() {
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

/// Gap between the winning logit and the runner-up. `None` for fewer than two logits.
pub fn logit_margin(y: &[f64]) -> Option<f64> {
    let w = argmax(y)?;
    let runner_up = y
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != w)
        .map(|(_, &v)| v)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))?;
    Some(y[w] - runner_up)
}

/// Fraction of samples whose argmax differs between `y` and `y_tilde`.
pub fn empirical_flip_rate(samples: &[NoiseSample]) -> Result<f64> {
    common_k(samples)?;
    Ok(count_flips(samples) as f64 / samples.len() as f64)
}

fn count_flips(samples: &[NoiseSample]) -> usize {
    samples
        .iter()
        .filter(|s| argmax(s.y()) != argmax(s.y_tilde()))
        .count()
}

/// Mean over trials of the i.i.d.-model flip probability `Phi(-margin / (sigma * sqrt 2))`.
pub fn predicted_flip_rate(margins: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::DegenerateSigma(sigma));
    }
    if margins.is_empty() {
        return Err(Error::Empty("margin list"));
    }
    let scale = sigma * std::f64::consts::SQRT_2;
    let mut total = 0.0;
    for &m in margins {
        if m < 0.0 || m.is_nan() {
            return Err(Error::NegativeMargin(m));
        }
        total += normal_cdf(-m / scale);
    }
    Ok(total / margins.len() as f64)
}

/// Standard error of a Bernoulli proportion `p` estimated from `n` trials.
pub fn binomial_standard_error(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Empirical and model-predicted flip rates of one set of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipStats {
    pub empirical_rate: f64,
    pub flips: usize,
    pub n_trials: usize,
    /// `None` when `sigma == 0`, where the Gaussian model is undefined.
    pub predicted_rate: Option<f64>,
    pub sigma: f64,
    /// Margin of the ideal output of each trial, in trial order.
    pub margins: Vec<f64>,
}

impl FlipStats {
    pub fn model_degenerate(&self) -> bool {
        self.predicted_rate.is_none()
    }
}

/// Computes flip statistics, predicting with the supplied `sigma`.
pub fn flip_stats(samples: &[NoiseSample], sigma: f64) -> Result<FlipStats> {
    let k = common_k(samples)?;
    if k < 2 {
        return Err(Error::InvalidParameter {
            name: "d_out",
            reason: "flip statistics need at least two logits".into(),
        });
    }
    let margins: Vec<f64> = samples
        .iter()
        .map(|s| logit_margin(s.y()).expect("k >= 2"))
        .collect();
    let flips = count_flips(samples);
    let predicted_rate = if sigma > 0.0 {
        Some(predicted_flip_rate(&margins, sigma)?)
    } else {
        None
    };
    Ok(FlipStats {
        empirical_rate: flips as f64 / samples.len() as f64,
        flips,
        n_trials: samples.len(),
        predicted_rate,
        sigma,
        margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax(&[]), None);
        assert_eq!(argmax(&[-1.0]), Some(0));
    }

    #[test]
    fn margins() {
        assert_eq!(logit_margin(&[1.0, 3.0, 3.0]), Some(0.0));
        assert_eq!(logit_margin(&[5.0, 1.0, 2.0]), Some(3.0));
        assert_eq!(logit_margin(&[5.0]), None);
    }

    #[test]
    fn worked_flip_example() {
        let s = NoiseSample::new(vec![2.31, 2.29, 2.10], vec![2.3099, 2.3103, 2.10]).unwrap();
        assert_eq!(argmax(s.y()), Some(0));
        assert_eq!(argmax(s.y_tilde()), Some(1));
        assert_eq!(empirical_flip_rate(&[s.clone()]).unwrap(), 1.0);
        assert!((logit_margin(s.y()).unwrap() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn identical_outputs_never_flip() {
        let s = NoiseSample::new(vec![0.2, 0.9, 0.1], vec![0.2, 0.9, 0.1]).unwrap();
        assert_eq!(empirical_flip_rate(&[s.clone(), s]).unwrap(), 0.0);
    }

    #[test]
    fn predicted_limits() {
        let sigma = 0.37;
        let at_one = predicted_flip_rate(&[sigma * std::f64::consts::SQRT_2; 4], sigma).unwrap();
        assert!((at_one - normal_cdf(-1.0)).abs() < 1e-15);
        assert!((at_one - 0.158_655_253_931_457).abs() < 1e-12);
        assert_eq!(predicted_flip_rate(&[0.0, 0.0], sigma).unwrap(), 0.5);
        assert!(predicted_flip_rate(&[40.0 * sigma * std::f64::consts::SQRT_2], sigma).unwrap() < 1e-300);
    }

    #[test]
    fn predicted_errors() {
        assert_eq!(predicted_flip_rate(&[1.0], 0.0), Err(Error::DegenerateSigma(0.0)));
        assert!(predicted_flip_rate(&[-1.0], 1.0).is_err());
        assert!(predicted_flip_rate(&[], 1.0).is_err());
    }

    #[test]
    fn stats_without_noise_are_degenerate() {
        let s = NoiseSample::new(vec![0.2, 0.9], vec![0.2, 0.9]).unwrap();
        let fs = flip_stats(&[s], 0.0).unwrap();
        assert!(fs.model_degenerate());
        assert_eq!(fs.empirical_rate, 0.0);
        assert_eq!(fs.margins.len(), 1);
    }
}

//! End-to-end single-vs-batched noise experiment.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matmul::{matmul_batched_row0, matmul_single, standard_normal_vec, Accumulator, Matrix, MatmulSpec, ReductionSchedule};
use crate::precision::{PrecisionFormat, SubnormalMode};
use crate::seeding::{derive_seed, Stream};
use crate::stats::{
    estimate_covariance, estimate_sigma, expected_js, flip_stats, simulate_iid_null, CovarianceSummary, FlipStats,
    NoiseSample, NullBaseline,
};

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d_in: usize,
    pub d_out: usize,
    pub batch: usize,
    pub n_trials: usize,
    pub precision: PrecisionFormat,
    pub schedule_single: ReductionSchedule,
    pub schedule_batched: ReductionSchedule,
    pub seed: u64,
    pub accumulator: Accumulator,
    /// Draw a fresh weight matrix every trial; otherwise one matrix is shared by all trials.
    pub resample_weights: bool,
    pub flush_subnormals: bool,
}

impl ExperimentConfig {
    /// 512 inputs, 1024 logits, batch 16, 10 000 trials.
    pub fn full_scale(precision: PrecisionFormat, seed: u64) -> Self {
        Self {
            d_in: 512,
            d_out: 1024,
            batch: 16,
            n_trials: 10_000,
            precision,
            schedule_single: ReductionSchedule::Sequential,
            schedule_batched: ReductionSchedule::Blocked { block_size: 32 },
            seed,
            accumulator: Accumulator::Float32,
            resample_weights: true,
            flush_subnormals: false,
        }
    }

    /// 128 inputs, 256 logits, batch 16, 1 000 trials.
    pub fn desk_scale(precision: PrecisionFormat, seed: u64) -> Self {
        Self {
            d_in: 128,
            d_out: 256,
            n_trials: 1_000,
            ..Self::full_scale(precision, seed)
        }
    }

    pub fn matmul_spec(&self) -> MatmulSpec {
        MatmulSpec {
            d_in: self.d_in,
            d_out: self.d_out,
            batch: self.batch,
            precision: self.precision,
            accumulator: self.accumulator,
            subnormals: if self.flush_subnormals {
                SubnormalMode::FlushToZero
            } else {
                SubnormalMode::Preserve
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.matmul_spec().validate()?;
        if self.d_out < 2 {
            return Err(Error::InvalidParameter {
                name: "d_out",
                reason: "need at least two logits to define a prediction".into(),
            });
        }
        if self.n_trials < 2 {
            return Err(Error::InvalidParameter {
                name: "n_trials",
                reason: "covariance needs at least two trials".into(),
            });
        }
        self.schedule_single.validate()?;
        self.schedule_batched.validate()
    }
}

/// Metrics of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub config: ExperimentConfig,
    pub sigma: f64,
    pub flip_stats: FlipStats,
    pub expected_js: f64,
    pub covariance: CovarianceSummary,
    /// Matched i.i.d. simulation; absent when `sigma == 0`.
    pub null_baseline: Option<NullBaseline>,
    pub wall_time_seconds: f64,
}

impl NoiseReport {
    /// No noise was observed, so the Gaussian model has nothing to predict with.
    pub fn is_degenerate(&self) -> bool {
        self.sigma == 0.0
    }

    /// Measured off-diagonal ratio exceeds the matched i.i.d. null's.
    pub fn exceeds_null_correlation(&self) -> Option<bool> {
        self.null_baseline
            .as_ref()
            .map(|n| self.covariance.off_diagonal_ratio > n.covariance.off_diagonal_ratio)
    }
}

fn weights_for(cfg: &ExperimentConfig, trial: usize) -> Matrix {
    let index = if cfg.resample_weights { trial as u64 } else { 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Stream::Weights, index));
    Matrix::standard_normal(cfg.d_in, cfg.d_out, cfg.precision, &mut rng)
}

fn trial_sample(cfg: &ExperimentConfig, trial: usize, shared_weights: Option<&Matrix>) -> Result<NoiseSample> {
    let spec = cfg.matmul_spec();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Stream::Input, trial as u64));
    let x = standard_normal_vec(cfg.d_in, cfg.precision, &mut rng);
    let owned;
    let w = match shared_weights {
        Some(w) => w,
        None => {
            owned = weights_for(cfg, trial);
            &owned
        }
    };
    let y = matmul_single(&x, w, &spec, cfg.schedule_single)?;
    let filler = derive_seed(cfg.seed, Stream::Filler, trial as u64);
    let y_tilde = matmul_batched_row0(&x, w, &spec, cfg.schedule_batched, filler)?;
    NoiseSample::new(y, y_tilde)
}

/// Recomputes the sample of one trial exactly as [`run_experiment`] produces it.
pub fn regenerate_trial(cfg: &ExperimentConfig, trial_index: usize) -> Result<NoiseSample> {
    cfg.validate()?;
    if trial_index >= cfg.n_trials {
        return Err(Error::TrialOutOfRange {
            index: trial_index,
            n_trials: cfg.n_trials,
        });
    }
    let shared = (!cfg.resample_weights).then(|| weights_for(cfg, 0));
    trial_sample(cfg, trial_index, shared.as_ref())
}

/// All trial samples in trial order, optionally on a dedicated pool of `workers` threads.
pub fn collect_samples(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<NoiseSample>> {
    cfg.validate()?;
    let shared = (!cfg.resample_weights).then(|| weights_for(cfg, 0));
    let work = || {
        (0..cfg.n_trials)
            .into_par_iter()
            .map(|i| trial_sample(cfg, i, shared.as_ref()))
            .collect::<Result<Vec<_>>>()
    };
    match workers {
        None => work(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter {
                name: "workers",
                reason: e.to_string(),
            })?
            .install(work),
    }
}

/// Runs the experiment on the global thread pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<NoiseReport> {
    run_experiment_with(cfg, None)
}

/// Runs the experiment; `workers` pins the thread count. Results do not depend on it.
pub fn run_experiment_with(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<NoiseReport> {
    let start = Instant::now();
    let samples = collect_samples(cfg, workers)?;
    let mut report = analyze(cfg, &samples)?;
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Computes every metric over samples already in trial order.
pub fn analyze(cfg: &ExperimentConfig, samples: &[NoiseSample]) -> Result<NoiseReport> {
    let sigma = estimate_sigma(samples)?;
    let flips = flip_stats(samples, sigma)?;
    let js = expected_js(samples)?;
    let covariance = estimate_covariance(samples)?;
    let null_baseline = if sigma > 0.0 {
        let ys: Vec<Vec<f64>> = samples.iter().map(|s| s.y().to_vec()).collect();
        let seed = derive_seed(cfg.seed, Stream::NullNoise, 0);
        Some(simulate_iid_null(&ys, sigma, seed, samples.len())?)
    } else {
        None
    };
    Ok(NoiseReport {
        config: cfg.clone(),
        sigma,
        flip_stats: flips,
        expected_js: js,
        covariance,
        null_baseline,
        wall_time_seconds: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(precision: PrecisionFormat) -> ExperimentConfig {
        ExperimentConfig {
            d_in: 32,
            d_out: 16,
            batch: 4,
            n_trials: 24,
            ..ExperimentConfig::full_scale(precision, 7)
        }
    }

    #[test]
    fn profiles() {
        let p = ExperimentConfig::full_scale(PrecisionFormat::Float16, 1);
        assert_eq!((p.d_in, p.d_out, p.batch, p.n_trials), (512, 1024, 16, 10_000));
        let d = ExperimentConfig::desk_scale(PrecisionFormat::Float16, 1);
        assert_eq!((d.d_in, d.d_out, d.batch, d.n_trials), (128, 256, 16, 1_000));
    }

    #[test]
    fn equal_schedules_single_row_is_degenerate() {
        let cfg = ExperimentConfig {
            batch: 1,
            schedule_batched: ReductionSchedule::Sequential,
            ..tiny(PrecisionFormat::Float16)
        };
        let r = run_experiment(&cfg).unwrap();
        assert!(r.is_degenerate());
        assert_eq!(r.flip_stats.empirical_rate, 0.0);
        assert_eq!(r.expected_js, 0.0);
        assert!(r.covariance.degenerate);
        assert!(r.null_baseline.is_none());
        assert!(regenerate_trial(&cfg, 3).unwrap().is_noiseless());
    }

    #[test]
    fn regenerate_matches_run() {
        for resample in [true, false] {
            let cfg = ExperimentConfig {
                resample_weights: resample,
                ..tiny(PrecisionFormat::BFloat16)
            };
            let all = collect_samples(&cfg, Some(2)).unwrap();
            for i in [0, 5, 23] {
                let a = regenerate_trial(&cfg, i).unwrap();
                assert_eq!(a, regenerate_trial(&cfg, i).unwrap());
                assert_eq!(a, all[i]);
            }
        }
    }

    #[test]
    fn regenerate_out_of_range() {
        let cfg = tiny(PrecisionFormat::Float16);
        assert_eq!(
            regenerate_trial(&cfg, 24).unwrap_err(),
            Error::TrialOutOfRange { index: 24, n_trials: 24 }
        );
    }

    #[test]
    fn fixed_weights_change_the_samples() {
        let a = collect_samples(&tiny(PrecisionFormat::Float16), None).unwrap();
        let cfg = ExperimentConfig {
            resample_weights: false,
            ..tiny(PrecisionFormat::Float16)
        };
        let b = collect_samples(&cfg, None).unwrap();
        assert_eq!(a[0], b[0]);
        assert_ne!(a[1].y(), b[1].y());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = tiny(PrecisionFormat::Float16);
        cfg.d_out = 1;
        assert!(run_experiment(&cfg).is_err());
        cfg = tiny(PrecisionFormat::Float16);
        cfg.n_trials = 1;
        assert!(run_experiment(&cfg).is_err());
        cfg = tiny(PrecisionFormat::Float16);
        cfg.schedule_batched = ReductionSchedule::Blocked { block_size: 0 };
        assert!(run_experiment(&cfg).is_err());
    }
}

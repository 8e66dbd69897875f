//! Versioned JSON report and covariance CSV dump.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, NoiseReport};
use crate::stats::{covariance::CovarianceScalars, null_model::NullBaselineSummary};

pub const SCHEMA_VERSION: u32 = 1;
pub const MARGIN_HISTOGRAM_BINS: usize = 64;
pub const INPUT_DISTRIBUTION: &str = "standard_normal";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReportOptions {
    /// Embed the full covariance matrix so `dump-cov` can read it back.
    pub retain_covariance: bool,
    /// Record wall time. Timed reports differ between otherwise identical runs.
    pub include_timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sigma: f64,
    pub empirical_flip_rate: f64,
    pub flips: usize,
    pub n_trials: usize,
    /// `null` when sigma is zero and the Gaussian model is degenerate.
    pub predicted_flip_rate: Option<f64>,
    pub expected_js: f64,
    pub off_diagonal_ratio: f64,
    pub null_off_diagonal_ratio: Option<f64>,
    pub exceeds_null_correlation: Option<bool>,
}

/// Fixed-width histogram over `[lower, upper]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of_margins(margins: &[f64], bins: usize) -> Self {
        let upper = margins.iter().copied().fold(0.0, f64::max);
        let mut counts = vec![0u64; bins];
        for &m in margins {
            let idx = if upper > 0.0 {
                ((m / upper) * bins as f64).floor() as usize
            } else {
                0
            };
            counts[idx.min(bins - 1)] += 1;
        }
        Self {
            lower: 0.0,
            upper,
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Row-major `K x K` covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub k: usize,
    pub values: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub input_distribution: String,
    pub degenerate: bool,
    pub metrics: Metrics,
    pub margins_histogram: Histogram,
    pub covariance: CovarianceScalars,
    pub null_baseline: Option<NullBaselineSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance_matrix: Option<CovarianceMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

impl NoiseReport {
    pub fn to_document(&self, opts: ReportOptions) -> ReportDocument {
        let null = self.null_baseline.as_ref();
        let covariance_matrix = opts.retain_covariance.then(|| {
            let m = &self.covariance.sigma_matrix;
            let k = m.nrows();
            let mut values = Vec::with_capacity(k * k);
            for i in 0..k {
                values.extend((0..k).map(|j| m[(i, j)]));
            }
            CovarianceMatrix { k, values }
        });
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            config: self.config.clone(),
            input_distribution: INPUT_DISTRIBUTION.to_string(),
            degenerate: self.is_degenerate(),
            metrics: Metrics {
                sigma: self.sigma,
                empirical_flip_rate: self.flip_stats.empirical_rate,
                flips: self.flip_stats.flips,
                n_trials: self.flip_stats.n_trials,
                predicted_flip_rate: self.flip_stats.predicted_rate,
                expected_js: self.expected_js,
                off_diagonal_ratio: self.covariance.off_diagonal_ratio,
                null_off_diagonal_ratio: null.map(|n| n.covariance.off_diagonal_ratio),
                exceeds_null_correlation: self.exceeds_null_correlation(),
            },
            margins_histogram: Histogram::of_margins(&self.flip_stats.margins, MARGIN_HISTOGRAM_BINS),
            covariance: self.covariance.scalars(),
            null_baseline: null.map(|n| n.summary()),
            covariance_matrix,
            wall_time_seconds: opts.include_timing.then_some(self.wall_time_seconds),
        }
    }
}

impl ReportDocument {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Report(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let v: Version = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
        if v.schema_version != SCHEMA_VERSION {
            return Err(Error::Report(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                v.schema_version
            )));
        }
        serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))
    }

    /// Writes the retained covariance as `i,j,value` rows after a `# K=.. N=.. R_off=..` header.
    pub fn write_covariance_csv(&self, out: &mut impl Write) -> Result<()> {
        let m = self.covariance_matrix.as_ref().ok_or_else(|| {
            Error::Report("report has no covariance matrix; rerun with covariance retention enabled".into())
        })?;
        write_covariance_csv(out, m, self.covariance.n_samples, self.covariance.off_diagonal_ratio)
    }
}

pub fn write_covariance_csv(out: &mut impl Write, m: &CovarianceMatrix, n_samples: usize, r_off: f64) -> Result<()> {
    let io = |e: std::io::Error| Error::Report(e.to_string());
    writeln!(out, "# K={} N={} R_off={}", m.k, n_samples, r_off).map_err(io)?;
    for i in 0..m.k {
        for j in 0..m.k {
            writeln!(out, "{i},{j},{}", m.get(i, j)).map_err(io)?;
        }
    }
    Ok(())
}

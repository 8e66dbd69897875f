use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::noise::{common_k, NoiseSample};
use crate::error::{Error, Result};

/// Sample covariance of the noise vectors and its off-diagonal mass.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSummary {
    /// `K x K`, symmetric by construction.
    pub sigma_matrix: DMatrix<f64>,
    pub off_diagonal_ratio: f64,
    pub trace: f64,
    pub n_samples: usize,
    /// Set when every entry of the covariance is zero; the ratio is then reported as 0.
    pub degenerate: bool,
}

/// Scalar part of a [`CovarianceSummary`], as stored in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceScalars {
    pub k: usize,
    pub n_samples: usize,
    pub off_diagonal_ratio: f64,
    pub trace: f64,
    pub degenerate: bool,
}

impl CovarianceSummary {
    pub fn k(&self) -> usize {
        self.sigma_matrix.nrows()
    }

    pub fn scalars(&self) -> CovarianceScalars {
        CovarianceScalars {
            k: self.k(),
            n_samples: self.n_samples,
            off_diagonal_ratio: self.off_diagonal_ratio,
            trace: self.trace,
            degenerate: self.degenerate,
        }
    }

    /// Largest `|S_ij - S_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let m = &self.sigma_matrix;
        let k = m.nrows();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..i {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }

    /// Smallest eigenvalue. Cost is cubic in `K`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.sigma_matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `true` when every eigenvalue is at least `-rel_tol * trace`, checked by
    /// a Cholesky factorization of the shifted matrix.
    pub fn is_positive_semidefinite(&self, rel_tol: f64) -> bool {
        if self.degenerate {
            return true;
        }
        let k = self.k();
        let shift = rel_tol * self.trace;
        let shifted = &self.sigma_matrix + DMatrix::<f64>::identity(k, k) * shift;
        shifted.cholesky().is_some()
    }
}

/// `sum_{i != j} |S_ij| / sum_{i,j} |S_ij|`; 0 for an all-zero matrix.
pub fn off_diagonal_ratio(m: &DMatrix<f64>) -> f64 {
    let mut diag = 0.0;
    let mut off = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i == j {
                diag += m[(i, j)].abs();
            } else {
                off += m[(i, j)].abs();
            }
        }
    }
    let total = diag + off;
    if total == 0.0 {
        0.0
    } else {
        off / total
    }
}

/// Unbiased sample covariance `1/(N-1) sum (eta - mean)(eta - mean)^T`.
pub fn estimate_covariance(samples: &[NoiseSample]) -> Result<CovarianceSummary> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let k = common_k(samples)?;
    let n = samples.len();

    let mut mean = vec![0.0; k];
    for s in samples {
        for (m, e) in mean.iter_mut().zip(s.eta()) {
            *m += e;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    // Centered noise, one contiguous column per logit.
    let mut centered = vec![0.0; n * k];
    for (t, s) in samples.iter().enumerate() {
        for (l, (e, m)) in s.eta().iter().zip(&mean).enumerate() {
            centered[l * n + t] = e - m;
        }
    }
    let column = |l: usize| &centered[l * n..(l + 1) * n];

    let denom = (n - 1) as f64;
    let mut sigma = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let ci = column(i);
        for j in i..k {
            let cj = column(j);
            let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            let v = dot / denom;
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }

    let trace = sigma.trace();
    let degenerate = sigma.iter().all(|&v| v == 0.0);
    let off_diagonal_ratio = off_diagonal_ratio(&sigma);
    Ok(CovarianceSummary {
        sigma_matrix: sigma,
        off_diagonal_ratio,
        trace,
        n_samples: n,
        degenerate,
    })
}

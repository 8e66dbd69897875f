use super::noise::{common_k, NoiseSample};
use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-9;

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if let Some(bad) = p.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::NotNormalized(format!("{name} has entry {bad}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized(format!("{name} sums to {total}")));
    }
    Ok(())
}

/// `(1+d) ln(1+d) + (1-d) ln(1-d)` for `d` in `[-1, 1]`, accurate for small `|d|`.
fn symmetric_entropy_gap(d: f64) -> f64 {
    let a = d.abs();
    if a < 1e-2 {
        // sum_k d^(2k) / (k (2k - 1))
        let d2 = d * d;
        let mut term = d2;
        let mut acc = 0.0;
        for k in 1..=6u32 {
            acc += term / (k * (2 * k - 1)) as f64;
            term *= d2;
        }
        acc
    } else {
        let up = (1.0 + a) * a.ln_1p();
        let down = if a >= 1.0 { 0.0 } else { (1.0 - a) * (-a).ln_1p() };
        up + down
    }
}

/// Jensen-Shannon divergence in nats, `0 <= D <= ln 2`.
///
/// Written as `1/2 * sum_i m_i * g(d_i)` with `m = (p+q)/2` and `d = (p-q)/(p+q)`,
/// where every term is non-negative, so nearly equal inputs don't cancel.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    Ok(js_unchecked(p, q))
}

fn js_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let s = a + b;
        if s == 0.0 {
            continue;
        }
        let d = ((a - b) / s).clamp(-1.0, 1.0);
        acc += 0.5 * s * symmetric_entropy_gap(d);
    }
    (0.5 * acc).clamp(0.0, std::f64::consts::LN_2)
}

/// Mean Jensen-Shannon divergence between `softmax(y)` and `softmax(y_tilde)`.
pub fn expected_js(samples: &[NoiseSample]) -> Result<f64> {
    common_k(samples)?;
    let total: f64 = samples
        .iter()
        .map(|s| js_unchecked(&softmax(s.y()), &softmax(s.y_tilde())))
        .sum();
    Ok(total / samples.len() as f64)
}

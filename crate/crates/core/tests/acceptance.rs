//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p fpnoise-core --test acceptance`.

use std::f64::consts::{LN_2, SQRT_2};
use std::process::ExitCode;

use fpnoise_core::stats::{
    binomial_standard_error, empirical_flip_rate, estimate_covariance, flip_stats, js_divergence, logit_margin,
    normal_cdf, predicted_flip_rate, simulate_iid_null, softmax,
};
use fpnoise_core::{
    quantize, run_experiment, run_experiment_with, ExperimentConfig, NoiseReport, NoiseSample, PrecisionFormat,
    ReportOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn monte_carlo_flip_formula() -> Outcome {
    let sigma = 1.0;
    let n = 1_000_000;
    let mut worst = 0.0f64;
    let mut pass = true;
    for (i, z) in [0.0, 0.5, 1.0, 2.0, 3.0].into_iter().enumerate() {
        let y = vec![z * sigma * SQRT_2, 0.0];
        let null = simulate_iid_null(&[y], sigma, SEED + i as u64, n).unwrap();
        let predicted = null.flip_stats.predicted_rate.unwrap();
        let se = binomial_standard_error(predicted, n);
        let dev = (null.flip_stats.empirical_rate - predicted).abs() / se;
        worst = worst.max(dev);
        pass &= dev <= 3.0;
    }
    outcome(pass, format!("z in {{0,0.5,1,2,3}}, 1e6 draws each, worst |dev| = {worst:.2} SE (limit 3)"))
}

fn brute_covariance(eta: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = eta.len();
    let k = eta[0].len();
    let mean: Vec<f64> = (0..k).map(|i| eta.iter().map(|e| e[i]).sum::<f64>() / n as f64).collect();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| eta.iter().map(|e| (e[i] - mean[i]) * (e[j] - mean[j])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect()
}

fn covariance_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(1..=5);
        let n = rng.random_range(2..=10);
        let eta: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let samples: Vec<NoiseSample> =
            eta.iter().map(|e| NoiseSample::from_noise(vec![0.0; k], e).unwrap()).collect();
        let got = estimate_covariance(&samples).unwrap();
        let want = brute_covariance(&eta);
        for i in 0..k {
            for j in 0..k {
                worst = worst.max((got.sigma_matrix[(i, j)] - want[i][j]).abs());
            }
        }
    }
    let fixture = [
        NoiseSample::from_noise(vec![0.0; 2], &[1.0, 1.0]).unwrap(),
        NoiseSample::from_noise(vec![0.0; 2], &[-1.0, -1.0]).unwrap(),
    ];
    let c = estimate_covariance(&fixture).unwrap();
    let fixture_ok = c.sigma_matrix.iter().all(|&v| v == 2.0) && c.off_diagonal_ratio == 0.5;
    outcome(
        worst <= 1e-12 && fixture_ok,
        format!(
            "100 random instances, max |err| = {worst:.1e} (limit 1e-12); fixture [[2,2],[2,2]] R_off=0.5: {}",
            if fixture_ok { "ok" } else { "mismatch" }
        ),
    )
}

struct Runs {
    f16: NoiseReport,
    bf16: NoiseReport,
}

fn full_size_runs() -> Runs {
    let run = |p| {
        let cfg = ExperimentConfig {
            n_trials: 2_000,
            ..ExperimentConfig::full_scale(p, SEED)
        };
        run_experiment(&cfg).unwrap()
    };
    Runs {
        f16: run(PrecisionFormat::Float16),
        bf16: run(PrecisionFormat::BFloat16),
    }
}

fn nonzero_noise_without_flips(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [&runs.f16, &runs.bf16] {
        let predicted = r.flip_stats.predicted_rate.unwrap_or(0.0);
        pass &= r.sigma > 0.0 && r.flip_stats.flips == 0 && predicted > 0.0;
        parts.push(format!(
            "{}: sigma={:.3e} flips={}/{} predicted={:.3e}",
            r.config.precision,
            r.sigma,
            r.flip_stats.flips,
            r.flip_stats.n_trials,
            predicted
        ));
    }
    outcome(pass, parts.join("; "))
}

fn correlation_above_null(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [&runs.f16, &runs.bf16] {
        let null = r.null_baseline.as_ref().map_or(f64::NAN, |n| n.covariance.off_diagonal_ratio);
        pass &= r.covariance.off_diagonal_ratio > null;
        parts.push(format!(
            "{}: R_off={:.2}% null={:.2}%",
            r.config.precision,
            r.covariance.off_diagonal_ratio * 100.0,
            null * 100.0
        ));
    }
    outcome(pass, parts.join("; "))
}

fn f16_sigma_in_band(runs: &Runs) -> Outcome {
    let s = runs.f16.sigma;
    outcome((1e-5..=1e-2).contains(&s), format!("f16 sigma = {s:.3e}, band [1e-5, 1e-2]"))
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig {
        n_trials: 120,
        ..ExperimentConfig::desk_scale(PrecisionFormat::Float16, SEED)
    };
    let opts = ReportOptions {
        retain_covariance: true,
        include_timing: false,
    };
    let json = |workers| {
        run_experiment_with(&cfg, Some(workers))
            .unwrap()
            .to_document(opts)
            .to_json()
            .unwrap()
    };
    let reference = json(1);
    let same = [json(1), json(4), json(4)].iter().all(|j| *j == reference);
    outcome(
        same,
        format!("{} byte report identical across repeats and 1/4 workers: {same}", reference.len()),
    )
}

fn metric_bounds(runs: &Runs) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let mut violations = Vec::new();
    for _ in 0..10_000 {
        let k = rng.random_range(2..=16);
        let scale = 10f64.powf(rng.random_range(-3.0..2.0));
        let a: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
        let js = js_divergence(&softmax(&a), &softmax(&b)).unwrap();
        if !(0.0..=LN_2).contains(&js) {
            violations.push(format!("js={js}"));
        }

        let (z1, z2) = (rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
        let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        let (p_lo, p_hi) = (normal_cdf(lo), normal_cdf(hi));
        if !(0.0..=1.0).contains(&p_lo) || !(0.0..=1.0).contains(&p_hi) || p_lo > p_hi {
            violations.push(format!("cdf({lo})={p_lo} cdf({hi})={p_hi}"));
        }

        let margin = logit_margin(&a).unwrap();
        let rate = predicted_flip_rate(&[margin], scale * rng.random_range(0.01..1.0)).unwrap();
        if !(0.0..=1.0).contains(&rate) {
            violations.push(format!("predicted={rate}"));
        }
        let sample = NoiseSample::new(a.clone(), b.clone()).unwrap();
        let emp = empirical_flip_rate(std::slice::from_ref(&sample)).unwrap();
        if !(0.0..=1.0).contains(&emp) {
            violations.push(format!("empirical={emp}"));
        }

        let x = f64::from_bits(rng.random::<u64>());
        if x.is_finite() {
            for fmt in PrecisionFormat::ALL {
                let q = quantize(x, fmt);
                if quantize(q, fmt).to_bits() != q.to_bits() {
                    violations.push(format!("quantize {fmt} {x:e}"));
                }
            }
        }
    }
    if runs.f16.covariance.off_diagonal_ratio.is_nan() {
        violations.push("R_off is NaN".into());
    }
    for r in [&runs.f16, &runs.bf16] {
        let c = &r.covariance;
        if c.max_asymmetry() != 0.0 || !c.is_positive_semidefinite(1e-9) {
            violations.push(format!("{} covariance not symmetric PSD", r.config.precision));
        }
        if !(0.0..=1.0).contains(&c.off_diagonal_ratio) || !(0.0..=LN_2).contains(&r.expected_js) {
            violations.push(format!("{} ratio/JS out of range", r.config.precision));
        }
    }
    let detail = if violations.is_empty() {
        "1e4 random inputs: JS in [0, ln 2], CDF monotone in [0,1], rates in [0,1], quantize idempotent; \
         K=1024 covariances symmetric and PSD"
            .to_string()
    } else {
        format!("{} violations, first: {}", violations.len(), violations[0])
    };
    outcome(violations.is_empty(), detail)
}

fn worked_flip_example() -> Outcome {
    let sample = NoiseSample::new(vec![2.31, 2.29, 2.10], vec![2.3099, 2.3103, 2.10]).unwrap();
    let stats = flip_stats(std::slice::from_ref(&sample), 1e-3).unwrap();
    let margin = stats.margins[0];
    let pass = stats.flips == 1 && stats.empirical_rate == 1.0 && (margin - 0.02).abs() < 1e-12;
    outcome(pass, format!("flips={} margin={margin:.12}", stats.flips))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id}: {name} :: {}", o.detail);
        if !o.pass {
            failed += 1;
        }
    };

    report(1, "Gaussian flip formula vs Monte Carlo", monte_carlo_flip_formula());
    report(2, "covariance vs brute-force oracle", covariance_oracle());
    let runs = full_size_runs();
    report(3, "nonzero noise, zero flips, positive prediction", nonzero_noise_without_flips(&runs));
    report(4, "measured R_off above i.i.d. null", correlation_above_null(&runs));
    report(5, "f16 sigma magnitude", f16_sigma_in_band(&runs));
    report(6, "bit-identical reports", determinism());
    report(7, "metric bounds", metric_bounds(&runs));
    report(8, "worked flip example", worked_flip_example());

    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

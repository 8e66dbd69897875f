use fpnoise_core::matmul::standard_normal_vec;
use fpnoise_core::{
    matmul_batched_row0, matmul_single, run_experiment, Accumulator, ExperimentConfig, Matrix, MatmulSpec,
    PrecisionFormat, ReductionSchedule, ReportDocument, ReportOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(precision: PrecisionFormat, seed: u64, n_trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        d_in: 64,
        d_out: 32,
        batch: 4,
        n_trials,
        ..ExperimentConfig::full_scale(precision, seed)
    }
}

#[test]
fn sequential_and_blocked_disagree_somewhere_in_f16() {
    let spec = MatmulSpec::new(512, 64, 16, PrecisionFormat::Float16, Accumulator::Native).unwrap();
    let mut differing = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = standard_normal_vec(spec.d_in, spec.precision, &mut rng);
        let w = Matrix::standard_normal(spec.d_in, spec.d_out, spec.precision, &mut rng);
        let single = matmul_single(&x, &w, &spec, ReductionSchedule::Sequential).unwrap();
        let batched =
            matmul_batched_row0(&x, &w, &spec, ReductionSchedule::Blocked { block_size: 32 }, seed + 1000).unwrap();
        if single.iter().zip(&batched).any(|(a, b)| a != b) {
            differing += 1;
        }
    }
    assert!(differing >= 1);
}

#[test]
fn filler_rows_do_not_leak_into_row_zero() {
    // Row-wise kernels: the other batch rows must not change row 0.
    let spec = MatmulSpec::new(96, 16, 8, PrecisionFormat::BFloat16, Accumulator::Native).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = standard_normal_vec(spec.d_in, spec.precision, &mut rng);
    let w = Matrix::standard_normal(spec.d_in, spec.d_out, spec.precision, &mut rng);
    let s = ReductionSchedule::Blocked { block_size: 16 };
    let a = matmul_batched_row0(&x, &w, &spec, s, 1).unwrap();
    let b = matmul_batched_row0(&x, &w, &spec, s, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, matmul_single(&x, &w, &spec, s).unwrap());
}

#[test]
fn sigma_is_stable_when_trials_double() {
    let mut cfg = small(PrecisionFormat::BFloat16, 0, 100);
    cfg.accumulator = Accumulator::Native;
    let sigmas = |n: usize| -> Vec<f64> {
        (1..=6u64)
            .map(|seed| {
                let mut c = cfg.clone();
                c.seed = seed;
                c.n_trials = n;
                run_experiment(&c).unwrap().sigma
            })
            .collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let base = sigmas(100);
    let doubled = sigmas(200);
    let m = mean(&base);
    let sd = (base.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (base.len() - 1) as f64).sqrt();
    assert!(sd > 0.0);
    assert!((mean(&doubled) - m).abs() < 3.0 * sd, "{m} vs {}", mean(&doubled));
}

#[test]
fn identical_schedules_are_degenerate() {
    let mut cfg = small(PrecisionFormat::Float16, 9, 20);
    cfg.schedule_batched = cfg.schedule_single;
    let report = run_experiment(&cfg).unwrap();
    assert!(report.is_degenerate());
    assert_eq!(report.flip_stats.predicted_rate, None);
    assert_eq!(report.flip_stats.empirical_rate, 0.0);
    assert!(report.null_baseline.is_none());
    assert!(report.to_document(ReportOptions::default()).degenerate);
}

#[test]
fn report_survives_a_json_round_trip() {
    let mut cfg = small(PrecisionFormat::BFloat16, 3, 30);
    cfg.accumulator = Accumulator::Native;
    let doc = run_experiment(&cfg).unwrap().to_document(ReportOptions {
        retain_covariance: true,
        include_timing: true,
    });
    let text = doc.to_json().unwrap();
    let back = ReportDocument::from_json(&text).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.to_json().unwrap(), text);
    assert_eq!(back.covariance_matrix.as_ref().unwrap().k, cfg.d_out);
}

#[test]
fn unknown_schema_versions_are_rejected() {
    let cfg = small(PrecisionFormat::Float16, 4, 10);
    let doc = run_experiment(&cfg).unwrap().to_document(ReportOptions::default());
    let mut value: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
    value["schema_version"] = serde_json::json!(99);
    assert!(ReportDocument::from_json(&value.to_string()).is_err());
}

#[test]
fn csv_header_carries_the_report_ratio() {
    let mut cfg = small(PrecisionFormat::BFloat16, 8, 12);
    cfg.d_out = 3;
    cfg.accumulator = Accumulator::Native;
    let doc = run_experiment(&cfg).unwrap().to_document(ReportOptions {
        retain_covariance: true,
        include_timing: false,
    });
    let mut buf = Vec::new();
    doc.write_covariance_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        format!("# K=3 N=12 R_off={}", doc.covariance.off_diagonal_ratio)
    );
    assert_eq!(lines.count(), 9);
}

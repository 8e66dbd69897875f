use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fpnoise_core::report::write_covariance_csv;
use fpnoise_core::stats::{binomial_standard_error, simulate_iid_null};
use fpnoise_core::{run_experiment_with, ExperimentConfig, ReportDocument, ReportOptions};

use crate::config::ConfigBuilder;
use crate::error::CliError;
use crate::table;
use crate::{DumpCovArgs, ExperimentArgs, RunArgs, ShowArgs, ValidateNullArgs};

pub fn resolve_config(args: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let mut b = ConfigBuilder::new(args.profile);
    if let Some(path) = &args.config {
        b.merge_file(path)?;
    }
    for pair in &args.set {
        b.set_pair(pair)?;
    }
    let numeric = [
        ("d_in", args.d_in),
        ("d_out", args.d_out),
        ("batch", args.batch),
        ("n_trials", args.n_trials),
    ];
    for (key, v) in numeric {
        if let Some(v) = v {
            b.set(key, &v.to_string())?;
        }
    }
    let text = [
        ("precision", &args.precision),
        ("schedule_single", &args.schedule_single),
        ("schedule_batched", &args.schedule_batched),
        ("accumulator", &args.accumulator),
    ];
    for (key, v) in text {
        if let Some(v) = v {
            b.set(key, v)?;
        }
    }
    if args.widened {
        b.set("widened_accumulator", "true")?;
    }
    if args.fixed_weights {
        b.set("resample_weights", "false")?;
    }
    if args.flush_subnormals {
        b.set("flush_subnormals", "true")?;
    }
    if let Some(seed) = args.seed {
        b.set("seed", &seed.to_string())?;
    }
    b.build()
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_report(path: &Path) -> Result<ReportDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ReportDocument::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn default_output(args: &RunArgs, cfg: &ExperimentConfig) -> PathBuf {
    let dir = args.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("fpnoise-{}-seed{}.json", cfg.precision.short_name(), cfg.seed))
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = resolve_config(&args.experiment)?;
    let report = run_experiment_with(&cfg, args.workers).map_err(|e| CliError::Config(e.to_string()))?;
    let doc = report.to_document(ReportOptions {
        retain_covariance: args.retain_covariance,
        include_timing: !args.no_timing,
    });
    let json = doc.to_json().map_err(|e| CliError::Io(e.to_string()))?;
    let out = args.output.clone().unwrap_or_else(|| default_output(args, &cfg));
    write_file(&out, json.as_bytes())?;

    if let Some(csv_path) = &args.cov_csv {
        let full = report.to_document(ReportOptions {
            retain_covariance: true,
            include_timing: false,
        });
        let mut buf = Vec::new();
        full.write_covariance_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        write_file(csv_path, &buf)?;
    }

    print!("{}", table::render_report(&doc));
    println!("report: {}", out.display());
    if !args.no_timing {
        println!("wall time: {:.2}s", report.wall_time_seconds);
    }
    Ok(())
}

fn read_margins(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed)
            .map_err(|e| CliError::Config(format!("{}: not a JSON array of numbers: {e}", path.display())));
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Config(format!("{}: bad margin `{t}`", path.display())))
        })
        .collect()
}

pub fn cmd_validate_null(args: &ValidateNullArgs) -> Result<(), CliError> {
    let sigma = args.sigma;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(CliError::Config(format!("sigma must be positive, got {sigma}")));
    }
    let seed = args
        .seed
        .ok_or_else(|| CliError::Config("no seed given; pass --seed".into()))?;
    let margins = match (args.margin, args.z, &args.margins_file) {
        (Some(m), _, _) => vec![m],
        (_, Some(z), _) => vec![z * sigma * std::f64::consts::SQRT_2],
        (_, _, Some(path)) => read_margins(path)?,
        _ => unreachable!("clap enforces one margin source"),
    };
    if margins.is_empty() {
        return Err(CliError::Config("no margins given".into()));
    }
    if let Some(bad) = margins.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
        return Err(CliError::Config(format!("margins must be finite and non-negative, got {bad}")));
    }
    let ys: Vec<Vec<f64>> = margins.iter().map(|&m| vec![m, 0.0]).collect();
    let null = simulate_iid_null(&ys, sigma, seed, args.n_draws).map_err(|e| CliError::Config(e.to_string()))?;

    let predicted = null.flip_stats.predicted_rate.expect("sigma > 0");
    let empirical = null.flip_stats.empirical_rate;
    let se = binomial_standard_error(predicted, args.n_draws);
    let deviation = (empirical - predicted).abs();
    let ok = deviation <= 3.0 * se;

    let rows = vec![vec![
        format!("{sigma:e}"),
        margins.len().to_string(),
        args.n_draws.to_string(),
        format!("{predicted:.6}"),
        format!("{empirical:.6}"),
        format!("{se:.2e}"),
        if se > 0.0 {
            format!("{:.2}", deviation / se)
        } else {
            "-".to_string()
        },
        if ok { "PASS" } else { "FAIL" }.to_string(),
    ]];
    print!(
        "{}",
        table::render(
            &["sigma", "margins", "draws", "Predicted", "Monte Carlo", "Std err", "|dev|/se", "Result"],
            &rows
        )
    );
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "Monte Carlo flip rate {empirical} deviates from predicted {predicted} by more than 3 standard errors ({se})"
        )))
    }
}

pub fn cmd_show(args: &ShowArgs) -> Result<(), CliError> {
    let doc = read_report(&args.report)?;
    if args.json {
        println!("{}", doc.to_json().map_err(|e| CliError::Io(e.to_string()))?);
    } else {
        print!("{}", table::render_report(&doc));
        if let Some(t) = doc.wall_time_seconds {
            println!("wall time: {t:.2}s");
        }
    }
    Ok(())
}

pub fn cmd_dump_covariance(args: &DumpCovArgs) -> Result<(), CliError> {
    let doc = read_report(&args.report)?;
    let matrix = doc.covariance_matrix.as_ref().ok_or_else(|| {
        CliError::Config(format!(
            "{} has no covariance matrix; rerun `fpnoise run` with --retain-covariance",
            args.report.display()
        ))
    })?;
    let mut buf = Vec::new();
    write_covariance_csv(&mut buf, matrix, doc.covariance.n_samples, doc.covariance.off_diagonal_ratio)
        .map_err(|e| CliError::Io(e.to_string()))?;
    match &args.output {
        Some(path) => write_file(path, &buf),
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

//! Plain-text tables laid out like the published flip-rate and correlation tables.

use std::fmt::Write;

use fpnoise_core::ReportDocument;

const HEADERS: [&str; 8] = [
    "Precision",
    "sigma",
    "Empirical Flip (%)",
    "Predicted Flip (%)",
    "E[D_JS]",
    "R_off",
    "Null R_off",
    "Finding",
];

fn finding(doc: &ReportDocument) -> &'static str {
    if doc.degenerate {
        return "DEGENERATE";
    }
    match doc.metrics.exceeds_null_correlation {
        Some(true) => "Correlated (above null)",
        Some(false) => "Not above null",
        None => "-",
    }
}

fn percent(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

pub fn report_row(doc: &ReportDocument) -> [String; 8] {
    let m = &doc.metrics;
    [
        doc.config.precision.short_name().to_string(),
        format!("{:.3e}", m.sigma),
        percent(m.empirical_flip_rate),
        m.predicted_flip_rate.map_or_else(|| "DEGENERATE".to_string(), percent),
        format!("{:.3e}", m.expected_js),
        percent(m.off_diagonal_ratio) + "%",
        m.null_off_diagonal_ratio.map_or_else(|| "-".to_string(), |r| percent(r) + "%"),
        finding(doc).to_string(),
    ]
}

pub fn render(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "| {} |", parts.join(" | "));
    };
    line(&mut out, &mut headers.iter().copied());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "|-{}-|", rule.join("-|-"));
    for row in rows {
        line(&mut out, &mut row.iter().map(String::as_str));
    }
    out
}

pub fn render_report(doc: &ReportDocument) -> String {
    let c = &doc.config;
    let mut out = format!(
        "d_in={} d_out={} batch={} trials={} seed={} schedules={}/{} accumulator={}\n",
        c.d_in, c.d_out, c.batch, c.n_trials, c.seed, c.schedule_single, c.schedule_batched, c.accumulator
    );
    out.push_str(&render(&HEADERS, &[report_row(doc).to_vec()]));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_line_up() {
        let t = render(&["a", "long header"], &[vec!["123456".into(), "x".into()]]);
        let lines: Vec<_> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
    }
}

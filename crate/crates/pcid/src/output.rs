//! Artifact writers: CSV traces, event tables, JSON metrics and
//! plot-ready per-figure files.
//!
//! Floats are written with Rust's shortest round-trip decimal formatting
//! so files are byte-stable given the seed; wall-clock fields never reach
//! disk.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::harness::{RunOutput, TraceRow};
use crate::matrix::Matrix;

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x}")
    }
}

fn matrix_headers(prefix: &str, rows: usize, cols: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            out.push(format!("{prefix}_{i}_{j}"));
        }
    }
    out
}

fn push_matrix(fields: &mut Vec<String>, m: &Matrix) {
    for v in m.data() {
        fields.push(fmt_f64(*v));
    }
}

/// Column layout shared by the proposed-law trace and the baseline
/// traces (baselines leave the estimator-specific columns as NaN).
pub fn trace_header(row: &TraceRow) -> String {
    let mut cols: Vec<String> = vec!["law".into(), "t".into()];
    cols.extend(matrix_headers("phi", row.phi.rows(), row.phi.cols()));
    cols.extend(matrix_headers("y", row.y.rows(), row.y.cols()));
    cols.extend(matrix_headers("y_clean", row.y_clean.rows(), row.y_clean.cols()));
    cols.push("delta".into());
    cols.extend(matrix_headers("upsilon", row.upsilon.rows(), row.upsilon.cols()));
    cols.push("eps_norm".into());
    cols.push("omega_s".into());
    cols.extend(matrix_headers("theta_hat", row.theta_hat.rows(), row.theta_hat.cols()));
    cols.extend(matrix_headers("theta_ft", row.theta_ft.rows(), row.theta_ft.cols()));
    cols.extend(matrix_headers("theta_true", row.theta_true.rows(), row.theta_true.cols()));
    cols.push("theta_err".into());
    cols.push("theta_ft_err".into());
    cols.push("stat_mean".into());
    cols.push("stat_thresh".into());
    cols.push("c_t".into());
    cols.push("ub".into());
    cols.join(",")
}

/// Serializes the proposed-law trace, decimated to every `decimate`-th row.
pub fn trace_csv(output: &RunOutput) -> String {
    let mut s = String::new();
    if output.trace.is_empty() {
        return s;
    }
    s.push_str(&trace_header(&output.trace[0]));
    s.push('\n');
    for row in output.trace.iter().step_by(output.config.decimate.max(1)) {
        let mut fields: Vec<String> = vec!["proposed".into(), fmt_f64(row.t)];
        push_matrix(&mut fields, &row.phi);
        push_matrix(&mut fields, &row.y);
        push_matrix(&mut fields, &row.y_clean);
        fields.push(fmt_f64(row.delta));
        push_matrix(&mut fields, &row.upsilon);
        fields.push(fmt_f64(row.eps_norm));
        fields.push(fmt_f64(row.omega_s));
        push_matrix(&mut fields, &row.theta_hat);
        push_matrix(&mut fields, &row.theta_ft);
        push_matrix(&mut fields, &row.theta_true);
        fields.push(fmt_f64(row.theta_err));
        fields.push(fmt_f64(row.theta_ft_err));
        fields.push(fmt_f64(row.stat_mean));
        fields.push(fmt_f64(row.stat_thresh));
        fields.push(fmt_f64(row.c_t));
        fields.push(fmt_f64(row.ub));
        let _ = writeln!(s, "{}", fields.join(","));
    }
    s
}

/// Serializes one baseline trace in the shared schema; columns that only
/// the proposed law produces hold NaN.
pub fn baseline_trace_csv(output: &RunOutput, law: &str) -> Option<String> {
    let rows = output.baseline_traces.get(law)?;
    let lead = output.trace.first()?;
    let mut s = String::new();
    s.push_str(&trace_header(lead));
    s.push('\n');
    let nan = fmt_f64(f64::NAN);
    for (row, base) in output
        .trace
        .iter()
        .zip(rows.iter())
        .step_by(output.config.decimate.max(1))
    {
        let mut fields: Vec<String> = vec![law.to_string(), fmt_f64(row.t)];
        push_matrix(&mut fields, &row.phi);
        push_matrix(&mut fields, &row.y);
        push_matrix(&mut fields, &row.y_clean);
        for _ in 0..(3 + row.upsilon.data().len()) {
            fields.push(nan.clone());
        }
        push_matrix(&mut fields, &base.theta);
        for _ in 0..row.theta_ft.data().len() {
            fields.push(nan.clone());
        }
        push_matrix(&mut fields, &row.theta_true);
        fields.push(fmt_f64(base.err));
        for _ in 0..5 {
            fields.push(nan.clone());
        }
        let _ = writeln!(s, "{}", fields.join(","));
    }
    Some(s)
}

/// Event table: one row per emitted estimate plus its matched truth.
pub fn events_csv(output: &RunOutput) -> String {
    let mut s = String::from("index,detect_time,t_hat,true_switch_time,error\n");
    for ev in &output.metrics.events {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            ev.index,
            fmt_f64(ev.detect_time),
            fmt_f64(ev.t_hat),
            ev.matched_switch.map(fmt_f64).unwrap_or_default(),
            ev.error.map(fmt_f64).unwrap_or_default(),
        );
    }
    s
}

pub fn metrics_json(output: &RunOutput) -> Result<String> {
    Ok(serde_json::to_string_pretty(&output.metrics)?)
}

fn column_csv(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = String::new();
    s.push_str(&header.join(","));
    s.push('\n');
    for row in rows {
        let _ = writeln!(s, "{}", row.into_iter().map(fmt_f64).collect::<Vec<_>>().join(","));
    }
    s
}

/// Plot-ready column sets. Always: the smoothed regressor with the
/// residual (`fig2`) and truth-versus-estimate (`fig3`). Disturbed runs
/// add the measured-output and residual-statistics comparison (`fig6`)
/// with its estimate companion (`fig7`); plant runs add the full
/// parameter sheet (`fig11`).
pub fn plot_files(output: &RunOutput) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let dec = output.config.decimate.max(1);
    let rows = || output.trace.iter().step_by(dec);

    files.push((
        "fig2.csv".to_string(),
        column_csv(
            &["t", "omega_s", "eps_norm"],
            rows().map(|r| vec![r.t, r.omega_s, r.eps_norm]),
        ),
    ));

    let theta_cols = |prefix: &str, m: &Matrix| -> Vec<String> {
        matrix_headers(prefix, m.rows(), m.cols())
    };
    if let Some(first) = output.trace.first() {
        let mut header: Vec<String> = vec!["t".into()];
        header.extend(theta_cols("theta_true", &first.theta_true));
        header.extend(theta_cols("theta_hat", &first.theta_hat));
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let body = column_csv(
            &header_refs,
            rows().map(|r| {
                let mut v = vec![r.t];
                v.extend_from_slice(r.theta_true.data());
                v.extend_from_slice(r.theta_hat.data());
                v
            }),
        );
        files.push(("fig3.csv".to_string(), body));

        let disturbed = output.config.w_max > 0.0;
        if disturbed {
            files.push((
                "fig6.csv".to_string(),
                column_csv(
                    &["t", "y_clean", "y_measured", "stat_mean", "stat_thresh"],
                    rows().map(|r| {
                        vec![r.t, r.y_clean.data()[0], r.y.data()[0], r.stat_mean, r.stat_thresh]
                    }),
                ),
            ));
            files.push((
                "fig7.csv".to_string(),
                column_csv(
                    &["t", "theta_err", "ub"],
                    rows().map(|r| vec![r.t, r.theta_err, r.ub]),
                ),
            ));
        }
        if output.config.scenario == crate::config::ScenarioKind::SwitchedPlant {
            files.push(("fig11.csv".to_string(), {
                let mut header: Vec<String> = vec!["t".into()];
                header.extend(theta_cols("theta_true", &first.theta_true));
                header.extend(theta_cols("theta_hat", &first.theta_hat));
                let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
                column_csv(
                    &header_refs,
                    rows().map(|r| {
                        let mut v = vec![r.t];
                        v.extend_from_slice(r.theta_true.data());
                        v.extend_from_slice(r.theta_hat.data());
                        v
                    }),
                )
            }));
        }
    }
    files
}

/// Writes the full artifact set under `dir`: `trace.csv`, per-law
/// baseline traces, `events.csv`, `metrics.json`, `config_resolved.json`
/// and `plotdata/*.csv`.
pub fn write_artifacts(output: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trace.csv"), trace_csv(output))?;
    for law in output.baseline_traces.keys() {
        if let Some(csv) = baseline_trace_csv(output, law) {
            fs::write(dir.join(format!("trace_{law}.csv")), csv)?;
        }
    }
    fs::write(dir.join("events.csv"), events_csv(output))?;
    fs::write(dir.join("metrics.json"), metrics_json(output)?)?;
    fs::write(
        dir.join("config_resolved.json"),
        serde_json::to_string_pretty(&output.config)?,
    )?;
    let plot_dir = dir.join("plotdata");
    fs::create_dir_all(&plot_dir)?;
    for (name, body) in plot_files(output) {
        fs::write(plot_dir.join(name), body)?;
    }
    Ok(())
}

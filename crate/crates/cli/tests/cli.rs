use std::path::Path;
use std::process::Command;

use horizon_cli::config::{ExperimentConfig, GridConfig};
use horizon_cli::sweep::execute_sweep;
use horizon_cli::{emit_plot_data, execute, load_report, CliError, EXIT_USAGE};
use horizon_core::MetricSpec;

fn config(id: &str, metric: MetricSpec, out: &Path) -> ExperimentConfig {
    let mut c: ExperimentConfig = serde_json::from_value(serde_json::json!({
        "id": id,
        "metric": metric,
        "output_dir": out,
    }))
    .unwrap();
    c.grid = GridConfig { n_eta: 64, n_xi: 64 };
    c.functionals.random_starts = 1;
    c
}

fn write_config(dir: &Path, c: &ExperimentConfig) -> std::path::PathBuf {
    let p = dir.join(format!("{}.json", c.id));
    std::fs::write(&p, serde_json::to_string_pretty(c).unwrap()).unwrap();
    p
}

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_horizon-lab"))
}

#[test]
fn round_run_has_no_horizon_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config("round", MetricSpec::Round, &tmp.path().join("out"));
    let status = lab().arg("run").arg(write_config(tmp.path(), &c)).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let report = load_report(&tmp.path().join("out")).unwrap();
    assert!(!report.horizon.detected);
    assert!(report.consistency.contradictions.is_empty());
    assert!(report.chain.as_ref().unwrap().holds);
    let hcurve = std::fs::read_to_string(tmp.path().join("out/hcurve.csv")).unwrap();
    assert_eq!(hcurve.lines().count(), 1 + report.levels.len());
}

#[test]
fn berger_run_detects_a_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = config("berger", MetricSpec::Berger { eps: 0.1 }, tmp.path());
    c.functionals.yamabe = false;
    let report = execute(&c).unwrap();
    assert!(report.horizon.detected);
    let (lo, hi) = report.horizon.bracket.unwrap();
    assert!(lo < hi && report.horizon.bracket_error.unwrap() > 0.0);
    assert!(report.yamabe.is_none() && report.chain.is_none());
}

#[test]
fn schema_violations_exit_with_usage_code() {
    let tmp = tempfile::tempdir().unwrap();
    let malformed = tmp.path().join("bad.json");
    std::fs::write(&malformed, r#"{"id": "x", "metric": "#).unwrap();
    let status = lab().arg("run").arg(&malformed).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));

    let mut c = config("grid", MetricSpec::Round, tmp.path());
    c.grid.n_eta = 96;
    let status = lab().arg("run").arg(write_config(tmp.path(), &c)).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));

    let status = lab().arg("run").arg(tmp.path().join("missing.json")).status().unwrap();
    assert_ne!(status.code(), Some(0));
}

#[test]
fn empty_sweep_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config("s", MetricSpec::Round, tmp.path());
    let err = execute_sweep(&[], &c).err().unwrap();
    assert!(matches!(err, CliError::Usage(_)));
    assert_eq!(err.exit_code(), EXIT_USAGE);
    let status = lab().arg("sweep").arg(write_config(tmp.path(), &c)).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));
}

#[test]
fn rerun_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config("again", MetricSpec::Berger { eps: 0.4 }, tmp.path());
    let a = serde_json::to_string(&execute(&c).unwrap().numeric_part()).unwrap();
    let b = serde_json::to_string(&execute(&c).unwrap().numeric_part()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn singleton_sweep_matches_round_run() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config("one", MetricSpec::Round, tmp.path());
    let round = execute(&c).unwrap();
    let swept = execute_sweep(&[1.0], &c).unwrap();
    assert_eq!(swept.summary.rows.len(), 1);
    let r = &swept.reports[0];
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
    assert!(close(r.volume.value, round.volume.value));
    assert!(close(r.vmax.lower_bound.value, round.vmax.lower_bound.value));
    assert!(close(r.yamabe.unwrap().value, round.yamabe.unwrap().value));
    assert!(close(r.green.normalization.value, round.green.normalization.value));
    assert_eq!(r.horizon.detected, round.horizon.detected);
    assert_eq!(r.levels.len(), round.levels.len());
    for (a, b) in r.levels.iter().zip(&round.levels) {
        assert!(close(a.h_h, b.h_h), "{} vs {}", a.h_h, b.h_h);
    }
    assert!(swept.summary.consistency.contradictions.is_empty());
}

#[test]
fn plot_emits_tidy_tables_and_header_only_files() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = config("plot", MetricSpec::Berger { eps: 0.1 }, tmp.path());
    c.functionals.yamabe = false;
    let report = execute(&c).unwrap();
    let files = emit_plot_data(std::slice::from_ref(&report), &tmp.path().join("p")).unwrap();
    assert_eq!(files.len(), 4);

    let mut rdr = csv::Reader::from_path(tmp.path().join("p/hcurve.csv")).unwrap();
    let h_h: Vec<f64> = rdr.records().map(|r| r.unwrap()[6].parse().unwrap()).collect();
    assert!(h_h.windows(2).any(|w| w[0] * w[1] < 0.0), "no sign change in h_h");

    let mut rdr = csv::Reader::from_path(tmp.path().join("p/hawking.csv")).unwrap();
    let masses: Vec<f64> = rdr.records().map(|r| r.unwrap()[5].parse().unwrap()).collect();
    assert!(masses.iter().all(|m| (m - 2.0).abs() < 1e-3));

    let mut empty = report.clone();
    empty.levels.clear();
    emit_plot_data(&[empty], &tmp.path().join("q")).unwrap();
    let text = std::fs::read_to_string(tmp.path().join("q/hcurve.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("experiment,metric,r,"));

    assert!(matches!(emit_plot_data(&[], tmp.path()), Err(CliError::Usage(_))));
}

#[test]
fn output_root_variable_prefixes_relative_dirs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = config("rooted", MetricSpec::Berger { eps: 0.7 }, Path::new("nested/run"));
    c.functionals.yamabe = false;
    let status = lab()
        .arg("run")
        .arg(write_config(tmp.path(), &c))
        .env(horizon_cli::OUTPUT_ROOT_ENV, tmp.path().join("root"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(tmp.path().join("root/nested/run/report.json").is_file());
}

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};
use crate::run::RunReport;
use crate::sweep::SweepRow;

pub const HCURVE_HEADER: [&str; 10] = [
    "experiment", "metric", "r", "area_g", "area_h", "h_g", "h_h", "h_h_min", "h_h_max", "hawking_mass_h",
];
pub const HAWKING_HEADER: [&str; 6] = ["experiment", "radius", "t", "area", "mean_curvature", "hawking_mass"];
pub const BATTERY_HEADER: [&str; 6] = ["experiment", "seed", "amplitude", "j", "j_f0", "excess"];
pub const THRESHOLD_HEADER: [&str; 8] = [
    "experiment", "metric", "eps", "detected", "bracket_lo", "bracket_hi", "strict_barrier", "vmax_lower_bound",
];
pub const SWEEP_HEADER: [&str; 12] = [
    "eps",
    "volume",
    "volume_error",
    "min_ricci",
    "vmax_lower_bound",
    "yamabe",
    "yamabe_error",
    "detected",
    "bracket_lo",
    "bracket_hi",
    "strict_barrier",
    "error",
];

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    Ok(w)
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Mean curvature in h along the distance levels of each report.
pub fn write_hcurve(path: &Path, reports: &[RunReport]) -> Result<()> {
    let mut w = writer(path, &HCURVE_HEADER)?;
    for r in reports {
        for l in &r.levels {
            w.write_record([
                r.id.clone(),
                r.metric.clone(),
                num(l.r),
                num(l.area_g),
                num(l.area_h),
                num(l.h_g),
                num(l.h_h),
                num(l.h_h_min),
                num(l.h_h_max),
                num(l.hawking_mass_h),
            ])?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Hawking mass along the reference Schwarzschild flow of each report.
pub fn write_hawking(path: &Path, reports: &[RunReport]) -> Result<()> {
    let mut w = writer(path, &HAWKING_HEADER)?;
    for r in reports {
        let s = &r.flow.samples;
        for k in 0..s.len() {
            w.write_record([
                r.id.clone(),
                num(s.radius[k]),
                num(s.t[k]),
                num(s.area[k]),
                num(s.mean_curvature[k]),
                num(s.hawking_mass[k]),
            ])?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reduced quotient of the perturbed profiles against the unperturbed one.
pub fn write_battery(path: &Path, reports: &[RunReport]) -> Result<()> {
    let mut w = writer(path, &BATTERY_HEADER)?;
    for r in reports {
        let j0 = r.reduced.j_f0.value;
        for b in &r.reduced.battery {
            w.write_record([
                r.id.clone(),
                b.seed.to_string(),
                num(b.amplitude),
                num(b.j),
                num(j0),
                num(b.j - j0),
            ])?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Horizon verdicts of the Berger reports, ordered by eps.
pub fn write_threshold(path: &Path, reports: &[RunReport]) -> Result<()> {
    let mut rows: Vec<(f64, &RunReport)> = reports
        .iter()
        .filter_map(|r| r.config.metric.berger_params().map(|(eps, _)| (eps, r)))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut w = writer(path, &THRESHOLD_HEADER)?;
    for (eps, r) in rows {
        let h = &r.horizon;
        w.write_record([
            r.id.clone(),
            r.metric.clone(),
            num(eps),
            h.detected.to_string(),
            opt(h.bracket.map(|b| b.0)),
            opt(h.bracket.map(|b| b.1)),
            h.strict_barrier.to_string(),
            num(r.vmax.lower_bound.value),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(path, &SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            num(r.eps),
            opt(r.volume.map(|v| v.value)),
            opt(r.volume.map(|v| v.error)),
            opt(r.min_ricci),
            opt(r.vmax_lower_bound),
            opt(r.yamabe.map(|v| v.value)),
            opt(r.yamabe.map(|v| v.error)),
            r.detected.map(|d| d.to_string()).unwrap_or_default(),
            opt(r.bracket.map(|b| b.0)),
            opt(r.bracket.map(|b| b.1)),
            r.strict_barrier.map(|d| d.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

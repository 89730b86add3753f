use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::output;
use crate::run::RunReport;

pub const PLOT_FILES: [&str; 4] = ["hcurve.csv", "hawking.csv", "battery.csv", "threshold.csv"];

/// Read a run report from a `report.json` file or a run output directory.
pub fn load_report(path: &Path) -> Result<RunReport> {
    let file = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { path: file, source })
}

/// Write tidy CSVs for the report set into `dir`; returns the files written.
/// Tables without rows are written with their header only.
pub fn emit_plot_data(reports: &[RunReport], dir: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(CliError::Usage("plot needs at least one report".into()));
    }
    output::ensure_dir(dir)?;
    let paths: Vec<PathBuf> = PLOT_FILES.iter().map(|f| dir.join(f)).collect();
    output::write_hcurve(&paths[0], reports)?;
    output::write_hawking(&paths[1], reports)?;
    output::write_battery(&paths[2], reports)?;
    output::write_threshold(&paths[3], reports)?;
    Ok(paths)
}

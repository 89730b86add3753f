use std::time::Instant;

use horizon_core::blowup::{theorem_consistency, ConsistencyReport, ConsistencySample};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output;
use crate::run::{execute, write_run_outputs, Estimate, RunReport};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub id: String,
    pub volume: Option<Estimate>,
    pub min_ricci: Option<f64>,
    pub vmax_lower_bound: Option<f64>,
    pub yamabe: Option<Estimate>,
    pub detected: Option<bool>,
    pub bracket: Option<(f64, f64)>,
    pub strict_barrier: Option<bool>,
    /// Failure of this row's pipeline, if any.
    pub error: Option<String>,
}

impl SweepRow {
    fn from_report(eps: f64, r: &RunReport) -> Self {
        Self {
            eps,
            id: r.id.clone(),
            volume: Some(r.volume),
            min_ricci: Some(r.curvature.min_ricci.value),
            vmax_lower_bound: Some(r.vmax.lower_bound.value),
            yamabe: r.yamabe,
            detected: Some(r.horizon.detected),
            bracket: r.horizon.bracket,
            strict_barrier: Some(r.horizon.strict_barrier),
            error: None,
        }
    }

    fn failed(eps: f64, id: String, e: &CliError) -> Self {
        Self {
            eps,
            id,
            volume: None,
            min_ricci: None,
            vmax_lower_bound: None,
            yamabe: None,
            detected: None,
            bracket: None,
            strict_barrier: None,
            error: Some(e.to_string()),
        }
    }
}

/// Where the horizon verdict switches along the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Threshold {
    /// Largest eps such that every sampled eps up to it has a detected horizon.
    pub eps_star: Option<f64>,
    /// Smallest sampled eps without a horizon.
    pub smallest_undetected: Option<f64>,
    /// Detection holds exactly on an initial segment of the sorted eps values.
    pub monotone: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub id: String,
    pub rows: Vec<SweepRow>,
    pub consistency: ConsistencyReport,
    pub threshold: Threshold,
    pub failures: usize,
    pub wall_clock_seconds: f64,
}

pub struct SweepOutcome {
    pub summary: SweepSummary,
    pub reports: Vec<RunReport>,
}

pub fn validate_eps(eps: &[f64]) -> Result<Vec<f64>> {
    if eps.is_empty() {
        return Err(CliError::Usage("the eps list is empty".into()));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(CliError::Usage(format!("eps = {e} is outside (0, 1]")));
    }
    let mut sorted = eps.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Usage("the eps list has duplicates".into()));
    }
    Ok(sorted)
}

pub fn threshold(rows: &[SweepRow]) -> Threshold {
    let verdicts: Vec<(f64, bool)> = rows.iter().filter_map(|r| r.detected.map(|d| (r.eps, d))).collect();
    let prefix = verdicts.iter().take_while(|(_, d)| *d).count();
    let monotone = verdicts[prefix..].iter().all(|(_, d)| !d);
    Threshold {
        eps_star: prefix.checked_sub(1).map(|k| verdicts[k].0),
        smallest_undetected: verdicts.iter().find(|(_, d)| !d).map(|v| v.0),
        monotone,
    }
}

/// Run the pipeline for every eps in parallel without writing files.
pub fn execute_sweep(eps: &[f64], config: &ExperimentConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let eps = validate_eps(eps)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<(f64, String, Result<RunReport>)> = pool.install(|| {
        eps.par_iter()
            .map(|&e| {
                let c = config.with_berger(e);
                (e, c.id.clone(), execute(&c))
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut reports = Vec::new();
    for (e, id, result) in results {
        match result {
            Ok(r) => {
                rows.push(SweepRow::from_report(e, &r));
                reports.push(r);
            }
            Err(err) => {
                warn!("sweep row eps = {e} failed: {err}");
                rows.push(SweepRow::failed(e, id, &err));
            }
        }
    }
    let samples: Vec<ConsistencySample> = reports
        .iter()
        .map(|r| ConsistencySample {
            metric: r.config.metric.clone(),
            vmax_lower_bound: r.vmax.lower_bound.value,
            verdict: r.verdict(),
        })
        .collect();
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    let summary = SweepSummary {
        id: config.id.clone(),
        threshold: threshold(&rows),
        consistency: theorem_consistency(&samples),
        rows,
        failures,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(SweepOutcome { summary, reports })
}

/// Sweep, write `sweep.csv`, `sweep.json` and one report directory per eps.
///
/// Contradictions take precedence over row failures in the returned error.
pub fn sweep(eps: &[f64], config: &ExperimentConfig) -> Result<SweepOutcome> {
    let outcome = execute_sweep(eps, config)?;
    let dir = config.resolved_output_dir();
    output::ensure_dir(&dir)?;
    for r in &outcome.reports {
        write_run_outputs(r, &dir.join(&r.id))?;
    }
    output::write_sweep(&dir.join("sweep.csv"), &outcome.summary.rows)?;
    output::write_json(&dir.join("sweep.json"), &outcome.summary)?;
    let s = &outcome.summary;
    if !s.consistency.contradictions.is_empty() {
        return Err(CliError::Contradiction {
            count: s.consistency.contradictions.len(),
        });
    }
    if s.failures > 0 {
        return Err(CliError::PartialFailure { count: s.failures });
    }
    Ok(outcome)
}

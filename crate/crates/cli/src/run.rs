use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use horizon_core::blowup::{
    blowup_scan, default_r_max, geometric_levels, horizon_indicator, theorem_consistency,
    ConsistencyReport, ConsistencySample, HorizonVerdict, LevelSample, ScanSettings,
};
use horizon_core::curvature::{curvature, vmax_rescaling, volume, CurvatureMethod};
use horizon_core::distance::distance_field;
use horizon_core::functionals::{
    reduced_quotient_j, reduced_target, yamabe_minimize, MinimizeSettings, Perturbed,
    ReducedQuadrature, F0,
};
use horizon_core::green::{green_function, GreenSettings};
use horizon_core::imcf::{monotonicity_check, schwarzschild_flow, FlowSamples};
use horizon_core::{build_metric, Error as CoreError, HopfGrid};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result, StageExt};
use crate::output;

/// A value with its error estimate or tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureSummary {
    pub method: CurvatureMethod,
    pub sectional_min: f64,
    pub sectional_max: f64,
    /// Ricci eigenvalues relative to g where the smallest one is attained.
    pub ricci: [f64; 3],
    /// Smallest Ricci eigenvalue; the error is the gap between the sampled
    /// curvature route and the coefficient fields.
    pub min_ricci: Estimate,
    pub scalar_min: f64,
    pub scalar_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VmaxSummary {
    pub applicable: bool,
    pub c_star: f64,
    pub lower_bound: Estimate,
    pub threshold: f64,
    pub meets_threshold: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreenSummary {
    /// Extrapolated `lim G d` at the pole.
    pub normalization: Estimate,
    pub solve_residual: f64,
    pub pde_residual: f64,
    pub lowest_eigenvalue: f64,
    pub iterations: usize,
    pub min_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub detected: bool,
    pub bracket: Option<(f64, f64)>,
    /// Bracket width, the radial resolution of the detection.
    pub bracket_error: Option<f64>,
    pub margin: f64,
    pub strict_barrier: bool,
    pub valid_levels: usize,
    pub skipped_levels: Vec<(f64, String)>,
    pub convention: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainCheck {
    /// `6 V^(2/3)` from the certified volume bound.
    pub sobolev_side: f64,
    pub yamabe_side: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryEntry {
    pub seed: u64,
    pub amplitude: f64,
    pub j: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedSummary {
    /// `J[f0]`; the error is the change under one quadrature refinement.
    pub j_f0: Estimate,
    pub target: f64,
    pub battery: Vec<BatteryEntry>,
    pub battery_min: f64,
    pub battery_below_f0: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSummary {
    pub mass: f64,
    pub max_mass_deviation: f64,
    pub monotone: bool,
    pub worst_drop: f64,
    pub samples: FlowSamples,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub id: String,
    pub config: ExperimentConfig,
    pub metric: String,
    pub volume: Estimate,
    pub curvature: CurvatureSummary,
    pub vmax: VmaxSummary,
    pub green: GreenSummary,
    pub horizon: HorizonSummary,
    /// Valid distance levels of the blowup scan.
    pub levels: Vec<LevelSample>,
    pub yamabe: Option<Estimate>,
    pub yamabe_caveat: Option<String>,
    pub chain: Option<ChainCheck>,
    pub reduced: ReducedSummary,
    pub flow: FlowSummary,
    pub consistency: ConsistencyReport,
    /// Seconds per stage; the only field that differs between identical runs.
    pub wall_clock: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn verdict(&self) -> HorizonVerdict {
        HorizonVerdict {
            detected: self.horizon.detected,
            bracket: self.horizon.bracket,
            margin: self.horizon.margin,
            strict_barrier: self.horizon.strict_barrier,
        }
    }

    /// The report with wall-clock times removed, for reproducibility comparisons.
    pub fn numeric_part(&self) -> Self {
        Self {
            wall_clock: BTreeMap::new(),
            ..self.clone()
        }
    }
}

struct Clock {
    times: BTreeMap<String, f64>,
    last: Instant,
}

impl Clock {
    fn new() -> Self {
        Self {
            times: BTreeMap::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.times.insert(stage.into(), (now - self.last).as_secs_f64());
        self.last = now;
    }
}

/// Run the full pipeline for one configuration without writing files.
pub fn execute(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let mut clock = Clock::new();
    let spec = &config.metric;
    let grid = HopfGrid::new(config.grid.n_eta, config.grid.n_xi).stage("grid")?;
    let metric = build_metric(spec, &grid).stage("build_metric")?;
    let coarse = HopfGrid::new(config.grid.n_eta / 2, config.grid.n_xi / 2).stage("grid")?;
    let vol = volume(&metric);
    let vol_coarse = volume(&build_metric(spec, &coarse).stage("build_metric")?);
    let volume_est = Estimate::new(vol, (vol - vol_coarse).abs());
    clock.lap("build_metric");

    let curv = curvature(&metric).stage("curvature")?;
    let field_min = metric.min_ricci();
    let curvature = CurvatureSummary {
        method: curv.method,
        sectional_min: curv.sectional_min,
        sectional_max: curv.sectional_max,
        ricci: curv.ricci,
        min_ricci: Estimate::new(curv.min_ricci.min(field_min), (curv.min_ricci - field_min).abs()),
        scalar_min: curv.scalar_min,
        scalar_max: curv.scalar_max,
    };
    clock.lap("curvature");

    let vmax = match vmax_rescaling(&metric) {
        Ok(b) => VmaxSummary {
            applicable: true,
            c_star: b.c_star,
            lower_bound: Estimate::new(b.vmax_lower_bound, b.vmax_lower_bound * volume_est.error / vol),
            threshold: b.threshold,
            meets_threshold: b.meets_threshold,
            note: None,
        },
        Err(CoreError::NotApplicable(msg)) => VmaxSummary {
            applicable: false,
            c_star: 0.0,
            lower_bound: Estimate::new(0.0, 0.0),
            threshold: std::f64::consts::PI.powi(2),
            meets_threshold: false,
            note: Some(msg),
        },
        Err(e) => return Err(CliError::Stage { stage: "vmax_rescaling", source: e }),
    };
    clock.lap("vmax_rescaling");

    let green_settings = GreenSettings {
        rel_tol: config.tolerances.green,
        ..GreenSettings::default()
    };
    let green = green_function(&metric, green_settings).stage("green_function")?;
    let green_summary = GreenSummary {
        normalization: Estimate::new(green.normalization, green.normalization_error),
        solve_residual: green.residual_norm,
        pde_residual: green.pde_residual,
        lowest_eigenvalue: green.lowest_eigenvalue,
        iterations: green.iterations,
        min_value: green.min_value,
    };
    clock.lap("green_function");

    let distance = distance_field(&metric).stage("distance_field")?;
    let r_max = config.levels.r_max.unwrap_or_else(|| default_r_max(spec));
    let levels = geometric_levels(r_max, config.levels.ratio, config.levels.count);
    let scan_settings = ScanSettings {
        rays: config.levels.rays,
        ..ScanSettings::default()
    };
    let scan = blowup_scan(&metric, &green, &distance, &levels, &scan_settings).stage("blowup_scan")?;
    let verdict = horizon_indicator(&scan).stage("horizon_indicator")?;
    clock.lap("blowup_scan");
    let horizon = HorizonSummary {
        detected: verdict.detected,
        bracket: verdict.bracket,
        bracket_error: verdict.bracket.map(|(a, b)| b - a),
        margin: verdict.margin,
        strict_barrier: verdict.strict_barrier,
        valid_levels: scan.valid_levels().count(),
        skipped_levels: scan
            .levels
            .iter()
            .filter(|l| l.skipped)
            .map(|l| (l.r, l.skip_reason.clone().unwrap_or_default()))
            .collect(),
        convention: scan.convention.clone(),
    };
    let valid: Vec<LevelSample> = scan.valid_levels().cloned().collect();

    let f = &config.functionals;
    let (yamabe, yamabe_caveat) = if f.yamabe {
        let settings = MinimizeSettings {
            rel_decrease: config.tolerances.yamabe,
            random_starts: f.random_starts,
            seed: config.seed,
            ..MinimizeSettings::default()
        };
        let y = yamabe_minimize(&metric, settings).stage("yamabe_minimize")?;
        (Some(Estimate::new(y.value, y.error_estimate)), Some(y.caveat))
    } else {
        (None, None)
    };
    let chain = match (&yamabe, vmax.applicable) {
        (Some(y), true) => {
            let lhs = 6.0 * vmax.lower_bound.value.powf(2.0 / 3.0);
            Some(ChainCheck {
                sobolev_side: lhs,
                yamabe_side: y.value,
                tolerance: config.tolerances.chain,
                holds: lhs <= y.value + config.tolerances.chain,
            })
        }
        _ => None,
    };
    clock.lap("yamabe_minimize");

    let reduced = reduced_battery(config)?;
    clock.lap("reduced_quotient");
    let flow = flow_summary(config)?;
    clock.lap("flow");

    let consistency = theorem_consistency(&[ConsistencySample {
        metric: spec.clone(),
        vmax_lower_bound: vmax.lower_bound.value,
        verdict: verdict.clone(),
    }]);
    info!(
        "{}: volume {:.6}, horizon {}, Y {:?}",
        config.id, vol, verdict.detected, yamabe.map(|y| y.value)
    );
    Ok(RunReport {
        id: config.id.clone(),
        config: config.clone(),
        metric: spec.label(),
        volume: volume_est,
        curvature,
        vmax,
        green: green_summary,
        horizon,
        levels: valid,
        yamabe,
        yamabe_caveat,
        chain,
        reduced,
        flow,
        consistency,
        wall_clock: clock.times,
    })
}

fn reduced_battery(config: &ExperimentConfig) -> Result<ReducedSummary> {
    let quad = ReducedQuadrature::default();
    let j0 = reduced_quotient_j(&F0, &quad).stage("reduced_quotient")?;
    let j0_fine = reduced_quotient_j(&F0, &quad.refined()).stage("reduced_quotient")?;
    let f = &config.functionals;
    let mut battery = Vec::with_capacity(f.battery_seeds * f.battery_amplitudes.len());
    for &amplitude in &f.battery_amplitudes {
        for k in 0..f.battery_seeds as u64 {
            let seed = config.seed.wrapping_add(k);
            let j = reduced_quotient_j(&Perturbed::random(amplitude, seed), &quad).stage("reduced_quotient")?;
            battery.push(BatteryEntry { seed, amplitude, j });
        }
    }
    let battery_min = battery.iter().map(|b| b.j).fold(f64::INFINITY, f64::min);
    let battery_below_f0 = battery.iter().filter(|b| b.j < j0).count();
    Ok(ReducedSummary {
        j_f0: Estimate::new(j0, (j0 - j0_fine).abs()),
        target: reduced_target(),
        battery,
        battery_min,
        battery_below_f0,
    })
}

fn flow_summary(config: &ExperimentConfig) -> Result<FlowSummary> {
    let f = &config.functionals;
    let samples = schwarzschild_flow(f.flow_mass, f.flow_steps, f.flow_t_max).stage("flow")?;
    let deviation = samples
        .hawking_mass
        .iter()
        .map(|m| (m - f.flow_mass).abs())
        .fold(0.0, f64::max);
    let mono = monotonicity_check(&samples.hawking_mass, config.tolerances.monotonicity).stage("flow")?;
    Ok(FlowSummary {
        mass: f.flow_mass,
        max_mass_deviation: deviation,
        monotone: mono.pass,
        worst_drop: mono.worst_violation,
        samples,
    })
}

/// Run one experiment, write `report.json` and `hcurve.csv`, and fail with
/// exit code 4 when the consistency check finds a contradiction.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let report = execute(config)?;
    let dir = config.resolved_output_dir();
    write_run_outputs(&report, &dir)?;
    if !report.consistency.contradictions.is_empty() {
        return Err(CliError::Contradiction {
            count: report.consistency.contradictions.len(),
        });
    }
    Ok(report)
}

pub(crate) fn write_run_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    output::ensure_dir(dir)?;
    output::write_json(&dir.join("report.json"), report)?;
    output::write_hcurve(&dir.join("hcurve.csv"), std::slice::from_ref(report))?;
    Ok(())
}

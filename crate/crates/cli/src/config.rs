use std::path::{Path, PathBuf};

use horizon_core::MetricSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable that relative output directories are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "HORIZON_OUTPUT_ROOT";

pub const MIN_GRID: usize = 64;
pub const MAX_GRID: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub metric: MetricSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub levels: LevelConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub functionals: FunctionalConfig,
    pub output_dir: PathBuf,
    /// Worker threads for sweeps; 0 uses every available core.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_eta: usize,
    pub n_xi: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_eta: 128, n_xi: 128 }
    }
}

/// Geometric sweep of distance levels `[r_max * ratio, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    /// Largest level; defaults to the largest radius clear of the far axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    pub ratio: f64,
    pub count: usize,
    pub rays: usize,
}

impl Default for LevelConfig {
    fn default() -> Self {
        Self {
            r_max: None,
            ratio: 1e-3,
            count: 48,
            rays: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual of the Green's function solve.
    pub green: f64,
    /// Relative quotient decrease that stops the Yamabe descent.
    pub yamabe: f64,
    /// Allowed slack in `6 V^(2/3) <= Y`.
    pub chain: f64,
    /// Allowed drop between consecutive Hawking masses.
    pub monotonicity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            green: 1e-8,
            yamabe: 1e-6,
            chain: 0.5,
            monotonicity: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    /// Run the Yamabe descent (the most expensive stage after the Green's solve).
    pub yamabe: bool,
    pub random_starts: usize,
    /// Perturbation seeds per amplitude in the reduced-quotient battery.
    pub battery_seeds: usize,
    pub battery_amplitudes: Vec<f64>,
    /// Schwarzschild mass of the reference flow.
    pub flow_mass: f64,
    pub flow_steps: usize,
    pub flow_t_max: f64,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        Self {
            yamabe: true,
            random_starts: 3,
            battery_seeds: 20,
            battery_amplitudes: vec![0.01, 0.05, 0.1],
            flow_mass: 2.0,
            flow_steps: 1000,
            flow_t_max: 6.0,
        }
    }
}

fn default_seed() -> u64 {
    7
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: Self = serde_json::from_str(&text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.id.trim().is_empty() || self.id.contains(['/', '\\']) {
            return bad(format!("id {:?} must be a nonempty path component", self.id));
        }
        self.metric
            .validate()
            .map_err(|e| CliError::Config(format!("metric: {e}")))?;
        for (name, n) in [("n_eta", self.grid.n_eta), ("n_xi", self.grid.n_xi)] {
            if !n.is_power_of_two() || !(MIN_GRID..=MAX_GRID).contains(&n) {
                return bad(format!("grid.{name} = {n} is not a power of two in [{MIN_GRID}, {MAX_GRID}]"));
            }
        }
        let l = &self.levels;
        if !(l.ratio > 0.0 && l.ratio < 1.0) {
            return bad(format!("levels.ratio = {} must lie in (0, 1)", l.ratio));
        }
        if l.count < 2 {
            return bad(format!("levels.count = {} must be at least 2", l.count));
        }
        if l.rays < 2 {
            return bad(format!("levels.rays = {} must be at least 2", l.rays));
        }
        if let Some(r) = l.r_max {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("levels.r_max = {r} must be positive"));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("green", t.green),
            ("yamabe", t.yamabe),
            ("chain", t.chain),
            ("monotonicity", t.monotonicity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerances.{name} = {v} must be positive"));
            }
        }
        let f = &self.functionals;
        if f.battery_seeds == 0 || f.battery_amplitudes.is_empty() {
            return bad("the perturbation battery must be nonempty".into());
        }
        if f.battery_amplitudes.iter().any(|a| !(a.is_finite() && *a != 0.0)) {
            return bad("battery amplitudes must be finite and nonzero".into());
        }
        if !(f.flow_mass > 0.0) || f.flow_steps < 100 || !(f.flow_t_max > 0.0) {
            return bad("flow needs mass > 0, steps >= 100 and t_max > 0".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            return bad("output_dir is empty".into());
        }
        Ok(())
    }

    /// Output directory, with relative paths taken under `$HORIZON_OUTPUT_ROOT` when set.
    pub fn resolved_output_dir(&self) -> PathBuf {
        resolve_output(&self.output_dir)
    }

    /// The same experiment with the metric replaced by a Berger sphere.
    pub fn with_berger(&self, eps: f64) -> Self {
        let metric = match self.metric {
            MetricSpec::ScaledBerger { scale, .. } => MetricSpec::ScaledBerger { eps, scale },
            _ => MetricSpec::Berger { eps },
        };
        Self {
            id: format!("{}_eps{}", self.id, eps),
            metric,
            ..self.clone()
        }
    }
}

pub fn resolve_output(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() && !root.is_empty() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

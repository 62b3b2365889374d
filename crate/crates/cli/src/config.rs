//! Experiment manifests. Every field but the seed has a default; command-line
//! flags are applied on top of the file.

use std::path::{Path, PathBuf};

use freerg_core::schema::MeasureJson;
use freerg_core::MetricGrid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Equally spaced evaluation points for densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XsSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for XsSpec {
    fn default() -> Self {
        XsSpec { lo: -2.5, hi: 2.5, points: 1001 }
    }
}

fn default_n_max() -> u32 {
    10
}

fn default_eps() -> [f64; 2] {
    [1e-2, 5e-3]
}

fn default_gap_window() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed_measure: Option<MeasureJson>,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default)]
    pub grid: MetricGrid,
    #[serde(default)]
    pub density_xs: XsSpec,
    #[serde(default = "default_eps", rename = "eps_schedule")]
    pub eps_schedule: [f64; 2],
    #[serde(default = "default_gap_window")]
    pub gap_window: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed_measure: None,
            n_max: default_n_max(),
            grid: MetricGrid::default(),
            density_xs: XsSpec::default(),
            eps_schedule: default_eps(),
            gap_window: default_gap_window(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_max < 1 {
            return Err(CliError::Input("n_max must be at least 1".into()));
        }
        self.grid.validate()?;
        let xs = &self.density_xs;
        if !(xs.lo < xs.hi) || xs.points < 2 {
            return Err(CliError::Input("density_xs needs lo < hi and at least 2 points".into()));
        }
        let [e1, e2] = self.eps_schedule;
        if !(e1 > e2 && e2 > 0.0) {
            return Err(CliError::Input(format!("eps_schedule must satisfy e1 > e2 > 0, got [{e1}, {e2}]")));
        }
        if !(self.gap_window > 0.0) {
            return Err(CliError::Input("gap_window must be positive".into()));
        }
        Ok(())
    }

    pub fn seed(&self) -> Result<&MeasureJson, CliError> {
        self.seed_measure
            .as_ref()
            .ok_or_else(|| CliError::Input("no seed measure: pass --seed or set seed_measure in the config".into()))
    }
}

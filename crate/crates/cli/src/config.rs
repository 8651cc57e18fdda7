//! Run and sweep configuration documents (one JSON file per run).

use serde::{Deserialize, Serialize};

use exwave_core::{
    build_radial_grid, default_powers, make_weight, Controls, DataFamily, Grading, HarmonicWeight,
    InitialData, RadialGrid, TestFunctionFamily,
};

use crate::CliError;

fn default_grading() -> Grading {
    Grading::Uniform
}

fn default_t_ladder() -> Vec<f64> {
    vec![8.0, 16.0, 32.0, 64.0]
}

/// Optional cut-off power overrides; defaults derive from `p`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CutoffConfig {
    pub ell: Option<u32>,
    pub k: Option<u32>,
}

/// A single deterministic run: geometry, exponent, data, controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub p: f64,
    /// Obstacle radius; 0 on the half-line. Defaults to 1 for dim >= 2.
    pub r_obstacle: Option<f64>,
    /// Truncation radius; defaults to `r_obstacle + 4 * t_end`.
    pub r_max: Option<f64>,
    pub cells: usize,
    #[serde(default = "default_grading")]
    pub grading: Grading,
    pub data: DataFamily,
    #[serde(default)]
    pub controls: Controls,
    #[serde(default)]
    pub cutoff: CutoffConfig,
    #[serde(default = "default_t_ladder")]
    pub t_ladder: Vec<f64>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dim < 1 {
            return Err(CliError::config(format!("dim must be >= 1, got {}", self.dim)));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(CliError::config(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.controls.t_end > 0.0 && self.controls.dt0 > 0.0) {
            return Err(CliError::config("controls.t_end and controls.dt0 must be positive".into()));
        }
        if !(self.controls.blowup_threshold > 0.0 && self.controls.dt_floor > 0.0) {
            return Err(CliError::config(
                "controls.blowup_threshold and controls.dt_floor must be positive".into(),
            ));
        }
        if self.t_ladder.iter().any(|t| !(*t > 0.0)) {
            return Err(CliError::config("t_ladder entries must be positive".into()));
        }
        Ok(())
    }

    pub fn r_obstacle(&self) -> f64 {
        self.r_obstacle.unwrap_or(if self.dim == 1 { 0.0 } else { 1.0 })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max.unwrap_or(self.r_obstacle() + 4.0 * self.controls.t_end)
    }

    pub fn build_grid(&self) -> Result<RadialGrid, CliError> {
        build_radial_grid(self.dim, self.r_obstacle(), self.r_max(), self.cells, self.grading)
            .map_err(CliError::from_config_stage)
    }

    /// Grid spanning the cut-off support `[r_obstacle, 2 * max ladder T]`.
    pub fn build_scaling_grid(&self, ladder: &[f64]) -> Result<RadialGrid, CliError> {
        let max_t = ladder.iter().cloned().fold(0.0_f64, f64::max);
        build_radial_grid(
            self.dim,
            self.r_obstacle(),
            2.0 * max_t,
            self.cells,
            self.grading,
        )
        .map_err(CliError::from_config_stage)
    }

    pub fn build_data(&self, grid: &RadialGrid, allow_raw: bool) -> Result<InitialData, CliError> {
        self.data.build(grid, allow_raw).map_err(CliError::from_config_stage)
    }

    pub fn build_weight(&self) -> Result<HarmonicWeight, CliError> {
        make_weight(self.dim, self.r_obstacle(), 1.0).map_err(CliError::from_config_stage)
    }

    pub fn cutoff_powers(&self) -> Result<(u32, u32), CliError> {
        let (ell_default, k_default) =
            default_powers(self.p).map_err(CliError::from_config_stage)?;
        Ok((self.cutoff.ell.unwrap_or(ell_default), self.cutoff.k.unwrap_or(k_default)))
    }

    pub fn build_family(&self, horizon: f64) -> Result<TestFunctionFamily, CliError> {
        let (ell, k) = self.cutoff_powers()?;
        TestFunctionFamily::new(self.build_weight()?, horizon, ell, k)
            .map_err(CliError::from_config_stage)
    }
}

/// A phase-diagram sweep: a base run crossed with exponent and amplitude
/// ladders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub p_values: Vec<f64>,
    /// Amplitude ladder; defaults to the base data amplitude.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        self.base.validate()?;
        if self.p_values.is_empty() {
            return Err(CliError::config("p_values must not be empty".into()));
        }
        if self.p_values.iter().any(|p| !(*p > 1.0)) {
            return Err(CliError::config("every p in p_values must exceed 1".into()));
        }
        if self.p_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::config("p_values must be strictly increasing".into()));
        }
        if self.amplitudes.iter().any(|a| !(*a > 0.0)) {
            return Err(CliError::config("amplitudes must be positive".into()));
        }
        Ok(())
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        if self.amplitudes.is_empty() {
            vec![self.base.data.amplitude()]
        } else {
            self.amplitudes.clone()
        }
    }
}

pub fn load_run_config(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("config parse error in {}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

pub fn load_sweep_spec(path: &std::path::Path) -> Result<SweepSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read spec {}: {e}", path.display())))?;
    let spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("spec parse error in {}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

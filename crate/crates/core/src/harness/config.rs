use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::covariance::DEFAULT_REL_TOL;
use crate::observations::Problem;
use crate::{Error, FieldParams, MinimizerOptions, ModelParams, Result, SphereGrid, StencilVariant, SweModel};

/// Every knob of the experiment harness. Loaded from TOML; CLI flags
/// override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub nlon: usize,
    pub nlat: usize,
    pub dt_list: Vec<f64>,
    pub ntobs_list: Vec<usize>,
    pub nsvs_list: Vec<usize>,
    pub problems: Vec<u8>,
    /// Seeds both the synthetic initial state and the observation noise.
    pub seed: u64,
    pub variant: StencilVariant,
    /// `dt` here is the step for single-run commands; sweeps override it.
    pub model: ModelParams,
    pub field: FieldParams,
    pub minimizer: MinimizerOptions,
    pub lambda: f64,
    pub rel_tol: f64,
    /// nSVs used by the trend series.
    pub trend_nsvs: usize,
    pub set2_ntobs: usize,
    pub set3_ntobs: Vec<usize>,
    /// Window length whose background feeds the singular-value table.
    pub sv_ntobs: usize,
    pub dd: DdConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdConfig {
    pub n_space: usize,
    pub n_time: usize,
    pub halo: usize,
    pub mu: f64,
}

impl Default for DdConfig {
    fn default() -> Self {
        Self { n_space: 1, n_time: 1, halo: 2, mu: 1.0 }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            nlon: 72,
            nlat: 36,
            dt_list: vec![50.0, 100.0, 150.0, 200.0],
            ntobs_list: vec![1, 2, 4, 6, 8, 10],
            nsvs_list: vec![4, 6, 8, 10, 12],
            problems: vec![1, 2, 3, 4],
            seed: 0,
            variant: StencilVariant::Corrected,
            model: ModelParams::default(),
            field: FieldParams::default(),
            minimizer: MinimizerOptions::default(),
            lambda: 1.0,
            rel_tol: DEFAULT_REL_TOL,
            trend_nsvs: 4,
            set2_ntobs: 10,
            set3_ntobs: vec![2, 6, 10],
            sv_ntobs: 2,
            dd: DdConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<SphereGrid> {
        SphereGrid::new(self.nlon, self.nlat)
    }

    pub fn model_with_dt(&self, dt: f64) -> Result<SweModel> {
        SweModel::new(self.grid()?, ModelParams { dt, ..self.model }, self.variant)
    }

    pub fn model(&self) -> Result<SweModel> {
        self.model_with_dt(self.model.dt)
    }

    pub fn problem_list(&self) -> Result<Vec<Problem>> {
        self.problems.iter().map(|&p| Problem::new(p)).collect()
    }
}

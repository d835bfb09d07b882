//! TOML run configuration.  Every table rejects unknown keys; values given on
//! the command line win over values given here.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub faces: FacesConfig,
    #[serde(default)]
    pub charts: ChartsConfig,
    #[serde(default)]
    pub cones: ConesConfig,
    #[serde(default)]
    pub flat: FlatConfig,
    #[serde(default)]
    pub phg: PhgConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub fit: FitConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacesConfig {
    pub k: Option<usize>,
    pub augmented: Option<bool>,
    pub cmax: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartsConfig {
    pub chart: Option<String>,
    pub samples: Option<usize>,
    pub region: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConesConfig {
    pub genus: Option<u32>,
    pub curvature: Option<i32>,
    pub beta: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    pub beta1: Option<String>,
    pub beta2: Option<String>,
    pub order: Option<usize>,
    pub beta: Option<String>,
    pub points: Option<String>,
    pub model: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhgConfig {
    pub beta: Option<String>,
    pub cutoff: Option<String>,
    pub order: Option<usize>,
    pub steps: Option<u32>,
    pub truncation: Option<String>,
    pub pair: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub beta: Option<String>,
    pub mesh: Option<String>,
    pub rmin: Option<f64>,
    pub rmax: Option<f64>,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    pub amplitude: Option<f64>,
    pub problem: Option<String>,
    pub model: Option<String>,
    pub perturb: Option<f64>,
    pub guard: Option<bool>,
    pub margin: Option<f64>,
    pub dump: Option<PathBuf>,
    pub beta1: Option<String>,
    pub beta2: Option<String>,
    pub order: Option<u32>,
    pub rhos: Option<String>,
    pub cutoff: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub terms: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }
}

//! Experiment configuration: a single JSON document, every field optional.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use gme_core::certify::MleOptions;
use gme_core::noise::BASELINE_WEIGHT;
use gme_core::photonic::BsParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BsPreset {
    Ideal,
    Experimental,
}

fn unit_grid(steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| k as f64 / steps as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phi: f64,
    pub eta_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub bs: BsPreset,
    /// Overrides both reflectivities of the preset.
    pub reflectivity: Option<f64>,
    pub bd_imperfection: f64,
    /// Zero disables simulated-counts tomography in scans.
    pub counts_per_setting: u64,
    pub mc_replicas: usize,
    /// Iteration cap for every maximum-likelihood fit.
    pub mle_max_iterations: usize,
    pub seed: u64,
    pub baseline_weight: f64,
    /// Gaussian wavepacket width used to label overlaps with delays.
    pub coherence_sigma_ps: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            phi: PI,
            eta_grid: unit_grid(100),
            v_grid: unit_grid(100),
            gamma_grid: unit_grid(20),
            bs: BsPreset::Ideal,
            reflectivity: None,
            bd_imperfection: 0.0,
            counts_per_setting: 10_000,
            mc_replicas: 100,
            mle_max_iterations: 100_000,
            seed: 0,
            baseline_weight: BASELINE_WEIGHT,
            coherence_sigma_ps: 500.0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            file: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} value {x} is outside [0, 1]")))
            }
        };
        for (name, grid) in [("eta_grid", &self.eta_grid), ("v_grid", &self.v_grid), ("gamma_grid", &self.gamma_grid)] {
            if grid.is_empty() {
                return Err(CliError::Config(format!("{name} is empty")));
            }
            for &x in grid.iter() {
                unit(name, x)?;
            }
        }
        if let Some(r) = self.reflectivity {
            unit("reflectivity", r)?;
        }
        unit("bd_imperfection", self.bd_imperfection)?;
        unit("baseline_weight", self.baseline_weight)?;
        if !self.phi.is_finite() {
            return Err(CliError::Config("phi must be finite".into()));
        }
        if !(self.coherence_sigma_ps > 0.0) {
            return Err(CliError::Config("coherence_sigma_ps must be positive".into()));
        }
        if self.mle_max_iterations == 0 {
            return Err(CliError::Config("mle_max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn mle_options(&self) -> MleOptions {
        MleOptions {
            max_iterations: self.mle_max_iterations,
            ..Default::default()
        }
    }

    pub fn bs_params(&self) -> BsParams {
        match (self.reflectivity, self.bs) {
            (Some(r), _) => BsParams { r_h: r, r_v: r },
            (None, BsPreset::Ideal) => BsParams::IDEAL,
            (None, BsPreset::Experimental) => BsParams::EXPERIMENTAL,
        }
    }

    /// SHA-256 of the configuration as serialized JSON, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

//! Pipeline configuration: JSON file plus flag overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use greybox_id::dataio::{NoiseKind, PrbsConfig};
use greybox_id::decision::PreferenceSpec;
use greybox_id::estimation::StructureDocument;
use greybox_id::moea::MoeaConfig;
use greybox_id::narx::PoolConfig;

use crate::CliError;

/// Candidate-pool pruning applied before the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PruningMode {
    /// Remove nonlinear output and cross-term clusters (the default).
    Clusters,
    /// Keep only the constant and linear clusters.
    Linear,
    /// No pruning.
    None,
}

/// Evenly spaced static reference grid built from the ideal converter line.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StaticGridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub v_d: f64,
}

impl Default for StaticGridSpec {
    fn default() -> Self {
        Self { min: 1.0, max: 4.0, count: 61, v_d: 24.0 }
    }
}

/// Where the identification records come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// The bundled synthetic fixture (published model M3 with equation-error
    /// noise and dithered PRBS excitation).
    SyntheticDefault { data_seed: u64 },
    /// A custom synthetic plant.
    Synthetic {
        data_seed: u64,
        structure: StructureDocument,
        noise_std: f64,
        noise: NoiseKind,
        prbs: PrbsConfig,
        dither: f64,
        n_est: usize,
        grid: StaticGridSpec,
    },
    /// Recorded data from CSV files. When no static-curve file is given the
    /// reference is sampled from the ideal line on the grid.
    Csv {
        dynamic: String,
        #[serde(default)]
        static_curve: Option<String>,
        n_est: usize,
        grid: StaticGridSpec,
    },
}

/// Which a posteriori selections to run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionSpec {
    #[serde(default = "default_true")]
    pub mmd: bool,
    #[serde(default)]
    pub mtd: Vec<PreferenceSpec>,
}

fn default_true() -> bool {
    true
}

impl Default for DecisionSpec {
    fn default() -> Self {
        Self {
            mmd: true,
            mtd: vec![
                PreferenceSpec { rankings: vec![3, 1, 2], intensity: 5.0 },
                PreferenceSpec { rankings: vec![1, 3, 2], intensity: 5.0 },
                PreferenceSpec { rankings: vec![1, 2, 3], intensity: 5.0 },
            ],
        }
    }
}

/// Full pipeline configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub pool: PoolConfig,
    pub pruning: PruningMode,
    pub data: DataSource,
    pub moea: MoeaConfig,
    #[serde(default)]
    pub decision: DecisionSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pool: PoolConfig::new(5, 5, 3).expect("valid default pool"),
            pruning: PruningMode::Clusters,
            data: DataSource::SyntheticDefault { data_seed: 42 },
            moea: MoeaConfig::nsga2(42),
            decision: DecisionSpec::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("bad config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.moea.validate().map_err(CliError::from_config_err)?;
        for pref in &self.decision.mtd {
            pref.validate().map_err(CliError::from_config_err)?;
        }
        match &self.data {
            DataSource::Synthetic { prbs, n_est, grid, noise_std, .. } => {
                prbs.validate().map_err(CliError::from_config_err)?;
                if *n_est >= prbs.length {
                    return Err(CliError::config(
                        "n_est must leave room for validation data".into(),
                    ));
                }
                if grid.count < 2 || grid.min >= grid.max {
                    return Err(CliError::config("invalid static grid".into()));
                }
                if *noise_std < 0.0 {
                    return Err(CliError::config("noise_std must be >= 0".into()));
                }
            }
            DataSource::Csv { grid, .. } => {
                if grid.count < 2 || grid.min >= grid.max {
                    return Err(CliError::config("invalid static grid".into()));
                }
            }
            DataSource::SyntheticDefault { .. } => {}
        }
        Ok(())
    }

    /// Stable short hash of the full configuration, recorded in every output.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(16);
        for b in &digest[..8] {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }
}

//! Experiment configuration file (TOML).
//!
//! Every field has a default, so an empty file is a complete config. A
//! minimal file:
//!
//! ```toml
//! seed = 7
//! strategy = "gdumb"
//!
//! [data]
//! csv = "logs/monitoring.csv"      # omit to use the synthetic generator
//!
//! [training]
//! epochs = 20
//! ```
//!
//! Component seeds (generator, splits, model init, strategy randomness,
//! GDumb's eval model) are never written in the file; they are derived from
//! `seed` under fixed labels.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{self, DriftGenConfig, TaskStream, DEFAULT_SPLIT_FRACTION};
use crate::error::{Error, Result};
use crate::eval::TrainConfig;
use crate::nn::ModelConfig;
use crate::seed;
use crate::strategies::{BuildContext, StrategyKind, StrategyParams};

/// Master seed used when a config does not set one.
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Monitoring CSV to load. When absent the generator settings are used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    pub split_fraction: f64,
    pub generator: DriftGenConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            csv: None,
            split_fraction: DEFAULT_SPLIT_FRACTION,
            generator: DriftGenConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Strategy used by `run`.
    pub strategy: StrategyKind,
    /// Directory for results; the command line may override it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub params: StrategyParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            strategy: StrategyKind::Naive,
            out_dir: None,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            training: TrainConfig::default(),
            params: StrategyParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("config serialization: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.data.split_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!("data.split_fraction = {f} not in (0, 1)")));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config(format!("seed {} exceeds {}", self.seed, i64::MAX)));
        }
        self.data.generator.validate()?;
        if self.data.csv.is_none() && self.data.generator.input_dim != self.model.input_dim {
            return Err(Error::Config(format!(
                "generator.input_dim = {} but model.input_dim = {}",
                self.data.generator.input_dim, self.model.input_dim
            )));
        }
        self.model.validate()?;
        self.training.validate()?;
        self.params.validate()
    }

    /// Hex SHA-256 of the serialized config.
    pub fn digest(&self) -> Result<String> {
        let hash = Sha256::digest(self.to_toml_string()?.as_bytes());
        Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            seed: seed::derive(self.seed, seed::MODEL_INIT, &[]),
            ..self.model.clone()
        }
    }

    pub fn generator_config(&self) -> DriftGenConfig {
        DriftGenConfig {
            seed: seed::derive(self.seed, seed::GENERATOR, &[]),
            ..self.data.generator.clone()
        }
    }

    pub fn build_context(&self) -> BuildContext {
        BuildContext {
            model: self.model_config(),
            train: self.training.clone(),
            seed: self.seed,
        }
    }

    /// Load or generate the task stream this config describes.
    pub fn load_stream(&self) -> Result<TaskStream> {
        let samples = match &self.data.csv {
            Some(path) => {
                return data::load_csv(path, self.data.split_fraction, self.seed);
            }
            None => data::generate_samples(&self.generator_config())?,
        };
        data::build_stream(samples, self.data.split_fraction, self.seed)
    }
}

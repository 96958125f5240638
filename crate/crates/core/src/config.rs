//! JSON experiment configuration. Every hyperparameter has a key, every key
//! has a default, and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::PretrainedSource;
use crate::model::{ModelDims, TrainConfig};
use crate::neural::{AdamConfig, RegularizationConfig};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub dims: ModelDims,
    /// Tokens seen fewer times map to `<unk>`.
    pub min_count: usize,
    pub pretrained_embeddings: PretrainedSource,
    /// Seed of the weight initialization.
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let dims = ModelDims::default();
        ModelConfig {
            dims,
            min_count: 1,
            pretrained_embeddings: PretrainedSource::Stub {
                seed: 0,
                dim: dims.pretrained_embed_dim,
            },
            init_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pretrained_embeddings.dim() != self.dims.pretrained_embed_dim {
            return Err(Error::ConfigViolation(format!(
                "pretrained_embeddings.dim = {} but dims.pretrained_embed_dim = {}",
                self.pretrained_embeddings.dim(),
                self.dims.pretrained_embed_dim
            )));
        }
        if self.dims.hidden_dim == 0 || self.dims.trained_embed_dim + self.dims.pretrained_embed_dim == 0 {
            return Err(Error::ConfigViolation("layer widths must be positive".into()));
        }
        Ok(())
    }

    /// Same settings with smaller layers.
    pub fn with_dims(mut self, dims: ModelDims) -> Self {
        self.dims = dims;
        self.pretrained_embeddings = match self.pretrained_embeddings {
            PretrainedSource::Stub { seed, .. } => PretrainedSource::Stub {
                seed,
                dim: dims.pretrained_embed_dim,
            },
            PretrainedSource::File { path, .. } => PretrainedSource::File {
                path,
                dim: dims.pretrained_embed_dim,
            },
        };
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    /// Copy embeddings and all three bi-LSTM layers.
    FullStack,
    /// Copy embeddings and the common layer; fresh towers.
    BottomOnly,
}

impl std::str::FromStr for TransferMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_stack" => Ok(TransferMode::FullStack),
            "bottom_only" => Ok(TransferMode::BottomOnly),
            other => Err(Error::ConfigViolation(format!("unknown transfer mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferConfig {
    pub mode: TransferMode,
    pub enable_gazetteer_features: bool,
    /// Seed of the fresh heads (and towers in `bottom_only`).
    pub init_seed: u64,
    /// Add target-only tokens to the vocabulary before fine-tuning.
    pub extend_vocab: bool,
    pub finetune: TrainConfig,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            mode: TransferMode::BottomOnly,
            enable_gazetteer_features: true,
            init_seed: 0,
            extend_vocab: true,
            finetune: TrainConfig::default(),
        }
    }
}

impl TransferConfig {
    pub fn validate(&self) -> Result<()> {
        if self.enable_gazetteer_features && self.mode == TransferMode::FullStack {
            return Err(Error::ConfigViolation(
                "gazetteer features change the tower inputs and require bottom_only transfer".into(),
            ));
        }
        self.finetune.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub regularization: RegularizationConfig,
    pub optimizer: AdamConfig,
    pub max_iterations: usize,
    /// Stop when the relative objective change falls below this.
    pub tolerance: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            regularization: RegularizationConfig {
                dropout: 0.0,
                ..RegularizationConfig::default()
            },
            optimizer: AdamConfig {
                learning_rate: 0.05,
                ..AdamConfig::default()
            },
            max_iterations: 500,
            tolerance: 1e-6,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        self.regularization.validate()?;
        if self.max_iterations == 0 {
            return Err(Error::ConfigViolation("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything the command-line pipeline needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub pretrain: TrainConfig,
    pub transfer: TransferConfig,
    pub baselines: BaselineConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.pretrain.validate()?;
        self.transfer.validate()?;
        self.baselines.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        crate::neural::checkpoint::sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.model.dims.hidden_dim, 128);
        assert_eq!(cfg.pretrain.patience, 3);
        assert_eq!(cfg.baselines.max_iterations, 500);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(ExperimentConfig::from_json(r#"{"modle": {}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"pretrain": {"epochs": 3, "lr": 0.1}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"pretrain": {"optimizer": {"beta3": 0.1}}}"#).is_err());
    }

    #[test]
    fn round_trip_and_nested_override() {
        let cfg = ExperimentConfig::from_json(r#"{"pretrain": {"epochs": 3, "regularization": {"l2": 0.5}}}"#).unwrap();
        assert_eq!(cfg.pretrain.epochs, 3);
        assert_eq!(cfg.pretrain.regularization.l2, 0.5);
        assert_eq!(cfg.pretrain.regularization.l1, 1e-6);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn gazetteers_with_full_stack_are_rejected() {
        let bad = r#"{"transfer": {"mode": "full_stack", "enable_gazetteer_features": true}}"#;
        assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::ConfigViolation(_))));
        let ok = r#"{"transfer": {"mode": "full_stack", "enable_gazetteer_features": false}}"#;
        ExperimentConfig::from_json(ok).unwrap();
    }

    #[test]
    fn embedding_width_must_agree() {
        let bad = r#"{"model": {"dims": {"pretrained_embed_dim": 10}}}"#;
        assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::ConfigViolation(_))));
    }
}

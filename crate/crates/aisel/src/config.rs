//! Experiment configuration: a strict JSON document with explicit defaults
//! for every omitted field. Unknown keys are rejected before any computation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::gin::TrainConfig;
use crate::pipeline::oracle::OracleSpec;
use crate::sampler::CcpConfig;
use crate::uncertainty::ClassifierConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Aisel,
    Random,
    GridTopk,
    None,
}

/// Where the actual dataset comes from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// Synthetic valve-and-calcification corpus with analytic ground truth.
    SyntheticBlobs,
    /// IDX image/label pair (MNIST layout).
    Idx {
        images: PathBuf,
        labels: PathBuf,
        classes: usize,
    },
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::SyntheticBlobs
    }
}

/// Axis-aligned augmentation ops; every one permutes pixels, never rescales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentOp {
    Rot90,
    Rot180,
    Rot270,
    Hflip,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run_id: String,
    pub seed: u64,
    /// Latent dimension of the feature box.
    pub r: usize,
    pub width: usize,
    pub height: usize,
    pub data: DataSpec,
    /// Per-fold training-split size; the synthetic corpus is sized so the
    /// stratified k-fold split yields exactly this many training examples.
    pub n_train: usize,
    pub m_virtual: usize,
    pub pool_size: usize,
    pub balanced_pool: bool,
    pub gin: TrainConfig,
    pub native: ClassifierConfig,
    pub improved: ClassifierConfig,
    pub ccp: CcpConfig,
    pub oracle: OracleSpec,
    pub method: SelectionMethod,
    pub folds: usize,
    /// Grid resolution (per axis) for grid_topk and entropy-grid exports.
    pub grid_size: usize,
    /// Augmentations applied to the actual training split.
    pub augment_ops: Vec<AugmentOp>,
    /// When set, expands the actual training split to exactly this factor
    /// by cycling the dihedral transforms; overrides `augment_ops`.
    pub augment_factor: Option<usize>,
    /// Apply the same augmentation to oracle-labeled virtual images.
    pub augment_virtual: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            run_id: "run".into(),
            seed: 0,
            r: 2,
            width: 16,
            height: 16,
            data: DataSpec::default(),
            n_train: 400,
            m_virtual: 400,
            pool_size: 4096,
            balanced_pool: false,
            gin: TrainConfig::default(),
            native: ClassifierConfig::default(),
            improved: ClassifierConfig::default(),
            ccp: CcpConfig::default(),
            oracle: OracleSpec::default(),
            method: SelectionMethod::Aisel,
            folds: 2,
            grid_size: 101,
            augment_ops: Vec::new(),
            augment_factor: None,
            augment_virtual: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("folds must be >= 2".into()));
        }
        if self.r == 0 || self.width == 0 || self.height == 0 {
            return Err(Error::Config("r and image dims must be >= 1".into()));
        }
        if self.pool_size < 100 {
            return Err(Error::Config("pool_size must be >= 100".into()));
        }
        if let Some(f) = self.augment_factor {
            if f == 0 {
                return Err(Error::Config("augment_factor must be >= 1".into()));
            }
        }
        self.gin.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.ccp.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Strict parse: unknown keys fail fast, omitted keys take defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a `dotted.path=value` override onto the JSON representation,
    /// then re-parses strictly. Values parse as JSON first, falling back to
    /// a bare string.
    pub fn apply_override(value: &mut serde_json::Value, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        let parsed: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        let mut cursor = value;
        let parts: Vec<&str> = path.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            if !cursor.is_object() {
                return Err(Error::Config(format!("override path {path:?} hits a non-object")));
            }
            let map = cursor.as_object_mut().unwrap();
            if i + 1 == parts.len() {
                map.insert((*part).to_string(), parsed);
                return Ok(());
            }
            cursor = map
                .entry((*part).to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
        }
        Ok(())
    }

    pub fn to_resolved_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

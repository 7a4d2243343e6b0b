//! The trained per-limb pipeline: quantile map plus the two voting boosters.
//! Cross-validation and the train/predict commands share this code path.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::{augment_dataset, AugmentPolicy};
use crate::boosting::{soft_vote, train_gbdt, BoostedEnsemble, TrainConfig};
use crate::domain::{LabelSet, Limb};
use crate::error::{Error, Result};
use crate::features::{extract_dataset, FeatureMatrix};
use crate::ingest::{fuse_sides, WindowConfig, WindowedDataset};
use crate::normalize::{fit_quantile, QuantileMap, DEFAULT_N_QUANTILES};

pub const PIPELINE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub window: WindowConfig,
    pub augmentation: AugmentPolicy,
    pub n_quantiles: usize,
    /// Member trained with balanced class weights.
    pub balanced: TrainConfig,
    /// Member trained without class weights, L2-regularized.
    pub regularized: TrainConfig,
    pub folds: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            augmentation: AugmentPolicy::default(),
            n_quantiles: DEFAULT_N_QUANTILES,
            balanced: TrainConfig::balanced(),
            regularized: TrainConfig::regularized(),
            folds: 5,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Propagate the run seed into both booster configurations.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.balanced.seed = seed;
        self.regularized.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.window.window_len()?;
        self.window.stride()?;
        self.balanced.validate()?;
        self.regularized.validate()?;
        if self.n_quantiles < 2 {
            return Err(Error::Config(format!("n_quantiles must be >= 2, got {}", self.n_quantiles)));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be >= 2, got {}", self.folds)));
        }
        Ok(())
    }
}

/// Soft-voted prediction for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub probabilities: Vec<f64>,
    pub balanced: Vec<f64>,
    pub regularized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub schema_version: u32,
    pub limb: Option<Limb>,
    pub label_set: LabelSet,
    pub quantile_map: QuantileMap,
    pub balanced: BoostedEnsemble,
    pub regularized: BoostedEnsemble,
}

impl TrainedPipeline {
    /// Fit the quantile map and both boosters on raw training features.
    pub fn fit(raw: &FeatureMatrix, labels: &[usize], label_set: &LabelSet, cfg: &PipelineConfig) -> Result<Self> {
        let quantile_map = fit_quantile(raw, cfg.n_quantiles)?;
        let normalized = quantile_map.transform(raw)?;
        let (balanced, regularized) = rayon::join(
            || train_gbdt(&normalized, labels, label_set, &cfg.balanced),
            || train_gbdt(&normalized, labels, label_set, &cfg.regularized),
        );
        Ok(Self {
            schema_version: PIPELINE_SCHEMA_VERSION,
            limb: None,
            label_set: label_set.clone(),
            quantile_map,
            balanced: balanced?,
            regularized: regularized?,
        })
    }

    /// Predict raw (un-normalized) feature rows.
    pub fn predict(&self, raw: &FeatureMatrix) -> Result<Vec<Prediction>> {
        let normalized = self.quantile_map.transform(raw)?;
        let (pb, pr) = rayon::join(
            || self.balanced.predict_proba_matrix(&normalized),
            || self.regularized.predict_proba_matrix(&normalized),
        );
        pb?.into_iter()
            .zip(pr?)
            .map(|(b, r)| {
                let (probabilities, class) = soft_vote(&b, &r)?;
                Ok(Prediction {
                    class,
                    probabilities,
                    balanced: b,
                    regularized: r,
                })
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let model: TrainedPipeline = serde_json::from_reader(std::io::BufReader::new(file))?;
        if model.schema_version != PIPELINE_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "model bundle schema version {} (expected {PIPELINE_SCHEMA_VERSION})",
                model.schema_version
            )));
        }
        Ok(model)
    }
}

/// Fuse, augment, extract and fit on every window of `limb`.
pub fn train_limb(d: &WindowedDataset, limb: Limb, cfg: &PipelineConfig) -> Result<TrainedPipeline> {
    cfg.validate()?;
    let fused = fuse_sides(d, limb);
    if fused.is_empty() {
        return Err(Error::InsufficientData(format!("no {limb} windows to train on")));
    }
    let augmented = augment_dataset(&fused, &cfg.augmentation);
    let extraction = extract_dataset(&augmented, cfg.window.rate)?;
    let labels = extraction.matrix.labels();
    let mut model = TrainedPipeline::fit(&extraction.matrix, &labels, &d.label_set, cfg)?;
    model.limb = Some(limb);
    Ok(model)
}

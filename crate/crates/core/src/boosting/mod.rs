//! Multiclass histogram gradient boosting with softmax loss, and two-model
//! soft voting.
//!
//! One engine serves both ensemble members: a balanced-weight configuration
//! without L2 regularization and an unweighted configuration with `lambda = 1`.

mod bins;
mod histogram;
mod tree;

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bins::{fit_bins, BinMapper, BinnedMatrix, MAX_BINS_LIMIT};
pub use histogram::{best_split, BinStats, Histogram, HistogramLayout, HistogramPool, Split, SplitParams, SplitRequest};
pub use tree::{grow_tree, grow_tree_pooled, GrowContext, GrowParams, GrownTree, Tree, TreeNode};

use crate::domain::LabelSet;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    Balanced,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub l2_regularization: f64,
    pub max_bins: usize,
    pub class_weighting: ClassWeighting,
    /// Recorded with the model. Training itself draws no random numbers.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::balanced()
    }
}

impl TrainConfig {
    /// Histogram booster trained with balanced class weights.
    pub fn balanced() -> Self {
        Self {
            iterations: 100,
            learning_rate: 0.1,
            max_leaves: 31,
            min_samples_leaf: 20,
            l2_regularization: 0.0,
            max_bins: 255,
            class_weighting: ClassWeighting::Balanced,
            seed: 0,
        }
    }

    /// Regularized booster trained without class weights.
    pub fn regularized() -> Self {
        Self {
            l2_regularization: 1.0,
            class_weighting: ClassWeighting::None,
            ..Self::balanced()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.max_leaves < 2 {
            return Err(Error::Config(format!("max_leaves must be >= 2, got {}", self.max_leaves)));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be >= 1".into()));
        }
        if !(self.l2_regularization >= 0.0 && self.l2_regularization.is_finite()) {
            return Err(Error::Config(format!("l2_regularization must be >= 0, got {}", self.l2_regularization)));
        }
        if !(2..=MAX_BINS_LIMIT).contains(&self.max_bins) {
            return Err(Error::Config(format!("max_bins must be in 2..={MAX_BINS_LIMIT}, got {}", self.max_bins)));
        }
        Ok(())
    }
}

/// `N / (K_present * n_c)` for each row's class.
pub fn balanced_weights(labels: &[usize]) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(Error::InsufficientData("balanced weights of an empty label list".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present == 1 {
        log::warn!("balanced weights requested with a single class present; all weights are 1");
    }
    let n = labels.len() as f64;
    Ok(labels
        .iter()
        .map(|&l| n / (present as f64 * counts[l] as f64))
        .collect())
}

/// Softmax, stable against large scores.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Trained multiclass model. Only classes present at training time get
/// trees; absent classes always receive probability 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub schema_version: u32,
    pub label_set: LabelSet,
    pub feature_names: Vec<String>,
    /// Label-set indices of the modelled classes, ascending.
    pub classes: Vec<usize>,
    /// Log weighted prior per modelled class.
    pub init_scores: Vec<f64>,
    pub learning_rate: f64,
    /// Iteration-major: tree `i * classes.len() + k` belongs to class `k`.
    pub trees: Vec<Tree>,
    pub bin_mapper: BinMapper,
    pub config: TrainConfig,
    /// Weighted training log-loss after initialization and after each iteration.
    pub train_loss: Vec<f64>,
}

fn weighted_log_loss(probs: &[f64], k: usize, targets: &[usize], weights: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut weight = 0.0;
    for (i, (&t, &w)) in targets.iter().zip(weights).enumerate() {
        total += -w * probs[i * k + t].max(1e-300).ln();
        weight += w;
    }
    total / weight
}

/// Fit a softmax gradient-boosted ensemble. `labels` index into `label_set`.
pub fn train_gbdt(m: &FeatureMatrix, labels: &[usize], label_set: &LabelSet, config: &TrainConfig) -> Result<BoostedEnsemble> {
    config.validate()?;
    let n = m.n_rows();
    if labels.len() != n {
        return Err(Error::Schema(format!("{} labels for {n} rows", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= label_set.len()) {
        return Err(Error::Schema(format!("label {bad} outside label set of {}", label_set.len())));
    }
    if let Some(pos) = m.as_flat().iter().position(|v| !v.is_finite()) {
        return Err(Error::Schema(format!(
            "non-finite feature at row {}, column '{}'",
            pos / m.n_cols(),
            m.names()[pos % m.n_cols()]
        )));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "boosting needs at least 2 classes, found {}",
            classes.len()
        )));
    }
    if n < 2 * config.min_samples_leaf {
        return Err(Error::InsufficientData(format!(
            "{n} rows is fewer than 2 x min_samples_leaf ({})",
            config.min_samples_leaf
        )));
    }

    let k = classes.len();
    let mut slot = vec![usize::MAX; label_set.len()];
    for (i, &c) in classes.iter().enumerate() {
        slot[c] = i;
    }
    let targets: Vec<usize> = labels.iter().map(|&l| slot[l]).collect();
    let weights = match config.class_weighting {
        ClassWeighting::Balanced => balanced_weights(&targets)?,
        ClassWeighting::None => vec![1.0; n],
    };

    let mut class_weight = vec![0.0; k];
    for (&t, &w) in targets.iter().zip(&weights) {
        class_weight[t] += w;
    }
    let total_weight: f64 = class_weight.iter().sum();
    let init_scores: Vec<f64> = class_weight.iter().map(|w| (w / total_weight).ln()).collect();

    let bin_mapper = fit_bins(m, config.max_bins)?;
    let binned = bin_mapper.bin_matrix(m);
    let layout = HistogramLayout::new(&bin_mapper);
    let ctx = GrowContext {
        mapper: &bin_mapper,
        binned: &binned,
        layout: &layout,
    };
    let params = GrowParams {
        max_leaves: config.max_leaves,
        min_samples_leaf: config.min_samples_leaf,
        l2: config.l2_regularization,
        learning_rate: config.learning_rate,
    };

    // Row-major raw scores and probabilities.
    let mut scores: Vec<f64> = (0..n).flat_map(|_| init_scores.iter().copied()).collect();
    let mut probs = vec![0.0; n * k];
    let refresh = |scores: &[f64], probs: &mut [f64]| {
        probs
            .par_chunks_mut(k)
            .zip(scores.par_chunks(k))
            .for_each(|(p, s)| p.copy_from_slice(&softmax(s)));
    };
    refresh(&scores, &mut probs);

    let mut trees = Vec::with_capacity(config.iterations * k);
    let mut train_loss = Vec::with_capacity(config.iterations + 1);
    train_loss.push(weighted_log_loss(&probs, k, &targets, &weights));
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut pool = HistogramPool::default();

    for _ in 0..config.iterations {
        let mut deltas: Vec<Vec<f64>> = Vec::with_capacity(k);
        for class in 0..k {
            grad.par_iter_mut()
                .zip(hess.par_iter_mut())
                .enumerate()
                .for_each(|(i, (g, h))| {
                    let p = probs[i * k + class];
                    let y = if targets[i] == class { 1.0 } else { 0.0 };
                    *g = weights[i] * (p - y);
                    *h = weights[i] * p * (1.0 - p);
                });
            let grown = grow_tree_pooled(&ctx, &mut pool, &grad, &hess, &params);
            trees.push(grown.tree);
            deltas.push(grown.row_values);
        }
        for (class, delta) in deltas.iter().enumerate() {
            for (i, d) in delta.iter().enumerate() {
                scores[i * k + class] += d;
            }
        }
        refresh(&scores, &mut probs);
        train_loss.push(weighted_log_loss(&probs, k, &targets, &weights));
    }

    Ok(BoostedEnsemble {
        schema_version: MODEL_SCHEMA_VERSION,
        label_set: label_set.clone(),
        feature_names: m.names().to_vec(),
        classes,
        init_scores,
        learning_rate: config.learning_rate,
        trees,
        bin_mapper,
        config: config.clone(),
        train_loss,
    })
}

impl BoostedEnsemble {
    pub fn n_iterations(&self) -> usize {
        self.trees.len() / self.classes.len()
    }

    /// Class probabilities over the full label set.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.feature_names.len() {
            return Err(Error::Schema(format!(
                "feature vector of {} values for a model trained on {}",
                row.len(),
                self.feature_names.len()
            )));
        }
        let k = self.classes.len();
        let mut scores = self.init_scores.clone();
        for (i, tree) in self.trees.iter().enumerate() {
            scores[i % k] += tree.predict(row);
        }
        let mut out = vec![0.0; self.label_set.len()];
        for (&c, p) in self.classes.iter().zip(softmax(&scores)) {
            out[c] = p;
        }
        Ok(out)
    }

    /// Row-major probabilities for every row of `m`; columns must match training.
    pub fn predict_proba_matrix(&self, m: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        if m.names().len() != self.feature_names.len() || m.names().iter().zip(&self.feature_names).any(|(a, b)| a != b) {
            return Err(Error::Schema("feature columns do not match the model".into()));
        }
        let rows: Vec<&[f64]> = m.rows().collect();
        rows.par_iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let model: BoostedEnsemble = serde_json::from_reader(std::io::BufReader::new(file))?;
        if model.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "model schema version {} (expected {MODEL_SCHEMA_VERSION})",
                model.schema_version
            )));
        }
        Ok(model)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Element-wise mean of two probability vectors and its argmax.
pub fn soft_vote(p1: &[f64], p2: &[f64]) -> Result<(Vec<f64>, usize)> {
    if p1.len() != p2.len() {
        return Err(Error::Schema(format!(
            "cannot average probability vectors of length {} and {}",
            p1.len(),
            p2.len()
        )));
    }
    let mean: Vec<f64> = p1.iter().zip(p2).map(|(a, b)| (a + b) / 2.0).collect();
    let class = argmax(&mean);
    Ok((mean, class))
}

//! Subject-grouped cross-validation of the full per-limb pipeline.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Serialize, Serializer};

use super::folds::group_kfold;
use super::metrics::{confusion_matrix, macro_f1};
use crate::augment::variant;
use crate::domain::{Limb, Provenance};
use crate::error::{Error, Result};
use crate::features::{anova_f_scores, extract_dataset, feature_infos, quantile_sorted, ChannelFamily, FeatureGroup, FeatureMatrix};
use crate::ingest::{fuse_sides, WindowedDataset};
use crate::pipeline::{PipelineConfig, TrainedPipeline};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// JSON has no infinity; write non-finite scores as strings.
fn finite_or_text<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn format_score(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub validation_subjects: Vec<String>,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub macro_f1: f64,
    pub macro_f1_balanced: f64,
    pub macro_f1_regularized: f64,
    /// Rows are true classes, columns predictions, both in label-set order.
    pub confusion: Vec<Vec<u64>>,
}

/// Mean and population standard deviation over folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub mean: f64,
    pub std: f64,
}

impl ScoreSummary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureScore {
    pub name: String,
    pub group: FeatureGroup,
    pub channel_family: ChannelFamily,
    #[serde(serialize_with = "finite_or_text")]
    pub f_score: f64,
}

/// Box-plot statistics of F scores within one feature group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub group: FeatureGroup,
    pub count: usize,
    #[serde(serialize_with = "finite_or_text")]
    pub min: f64,
    #[serde(serialize_with = "finite_or_text")]
    pub q1: f64,
    #[serde(serialize_with = "finite_or_text")]
    pub median: f64,
    #[serde(serialize_with = "finite_or_text")]
    pub q3: f64,
    #[serde(serialize_with = "finite_or_text")]
    pub max: f64,
}

impl GroupStats {
    fn of(group: FeatureGroup, scores: &[FeatureScore]) -> Self {
        let mut values: Vec<f64> = scores.iter().filter(|s| s.group == group).map(|s| s.f_score).collect();
        values.sort_by(f64::total_cmp);
        // Linear interpolation against an infinite endpoint would give NaN.
        let q = |p: f64| {
            let pos = p * (values.len().saturating_sub(1)) as f64;
            if values.is_empty() {
                0.0
            } else if values[pos.ceil() as usize].is_infinite() && pos.fract() > 0.0 {
                f64::INFINITY
            } else {
                quantile_sorted(&values, p)
            }
        };
        Self {
            group,
            count: values.len(),
            min: q(0.0),
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: q(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub limb: Limb,
    pub labels: Vec<String>,
    pub folds: Vec<FoldResult>,
    /// Soft-voted ensemble.
    pub voting: ScoreSummary,
    pub balanced: ScoreSummary,
    pub regularized: ScoreSummary,
    /// Sum of the per-fold confusion matrices.
    pub confusion_total: Vec<Vec<u64>>,
    /// ANOVA F score of every feature on the fused original windows.
    pub f_scores: Vec<FeatureScore>,
    pub f_score_groups: Vec<GroupStats>,
    pub config: PipelineConfig,
}

impl EvalReport {
    pub fn fold_scores(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.macro_f1).collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    /// Summed confusion matrix with class names on both axes.
    pub fn write_confusion_csv(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "# schema_version={REPORT_SCHEMA_VERSION}").map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = vec!["truth\\prediction".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.labels.iter().zip(&self.confusion_total) {
            let mut record = vec![name.clone()];
            record.extend(row.iter().map(u64::to_string));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn write_group_stats_csv(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "# schema_version={REPORT_SCHEMA_VERSION}").map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["group", "count", "min", "q1", "median", "q3", "max"])?;
        for g in &self.f_score_groups {
            w.write_record([
                g.group.as_str().to_string(),
                g.count.to_string(),
                format_score(g.min),
                format_score(g.q1),
                format_score(g.median),
                format_score(g.q3),
                format_score(g.max),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Raw features of the fused windows under each provenance, aligned by row.
struct FeatureCache {
    original: FeatureMatrix,
    variants: Vec<FeatureMatrix>,
}

impl FeatureCache {
    fn build(fused: &WindowedDataset, cfg: &PipelineConfig) -> Result<Self> {
        let rate = cfg.window.rate;
        let original = extract_dataset(fused, rate)?.matrix;
        let variants = cfg
            .augmentation
            .variants()
            .iter()
            .map(|&p| {
                let transformed = WindowedDataset {
                    windows: fused.windows.iter().map(|w| variant(w, p)).collect(),
                    label_set: fused.label_set.clone(),
                };
                extract_dataset(&transformed, rate).map(|e| e.matrix)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { original, variants })
    }

    /// Training matrix laid out like `augment_dataset`: originals, then one block per variant.
    fn training(&self, rows: &[usize]) -> Result<FeatureMatrix> {
        let blocks: Vec<FeatureMatrix> = std::iter::once(&self.original)
            .chain(&self.variants)
            .map(|m| m.select_rows(rows))
            .collect();
        FeatureMatrix::concat(&blocks.iter().collect::<Vec<_>>())
    }
}

/// Grouped k-fold evaluation of the fused `limb` dataset. Augmentation and
/// quantile fitting only ever see training-fold rows.
pub fn run_cv(d: &WindowedDataset, limb: Limb, cfg: &PipelineConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let fused = fuse_sides(d, limb);
    let subjects = fused.subjects();
    let plan = group_kfold(&subjects, cfg.folds, cfg.seed)?;
    plan.check(&subjects)?;
    let n_classes = d.label_set.len();

    log::info!("{limb}: extracting features for {} windows", fused.len());
    let cache = FeatureCache::build(&fused, cfg)?;
    let all_labels = cache.original.labels();

    let mut folds = Vec::with_capacity(plan.folds.len());
    for (i, fold) in plan.folds.iter().enumerate() {
        let validation: HashSet<&String> = fold.validation.iter().collect();
        let (val_rows, train_rows): (Vec<usize>, Vec<usize>) =
            (0..fused.len()).partition(|&r| validation.contains(&fused.windows[r].meta.subject));

        let train = cache.training(&train_rows)?;
        if train.meta().iter().any(|m| validation.contains(&m.subject)) {
            return Err(Error::Invariant(format!("fold {i}: validation subject in training rows")));
        }
        let val = cache.original.select_rows(&val_rows);
        if val.meta().iter().any(|m| m.provenance != Provenance::Original) {
            return Err(Error::Invariant(format!("fold {i}: augmented validation window")));
        }

        log::info!("{limb} fold {}/{}: {} training rows, {} validation rows", i + 1, plan.folds.len(), train.n_rows(), val.n_rows());
        let model = TrainedPipeline::fit(&train, &train.labels(), &d.label_set, cfg)?;
        let predictions = model.predict(&val)?;
        let truth = val.labels();
        let voted: Vec<usize> = predictions.iter().map(|p| p.class).collect();
        let argmax_of = |pick: fn(&crate::pipeline::Prediction) -> &Vec<f64>| -> Vec<usize> {
            predictions.iter().map(|p| crate::boosting::argmax(pick(p))).collect()
        };
        let balanced = argmax_of(|p| &p.balanced);
        let regularized = argmax_of(|p| &p.regularized);

        folds.push(FoldResult {
            fold: i,
            validation_subjects: fold.validation.clone(),
            train_rows: train.n_rows(),
            validation_rows: val.n_rows(),
            macro_f1: macro_f1(&truth, &voted, n_classes)?,
            macro_f1_balanced: macro_f1(&truth, &balanced, n_classes)?,
            macro_f1_regularized: macro_f1(&truth, &regularized, n_classes)?,
            confusion: confusion_matrix(&truth, &voted, n_classes)?,
        });
    }

    let mut confusion_total = vec![vec![0u64; n_classes]; n_classes];
    for f in &folds {
        for (total_row, row) in confusion_total.iter_mut().zip(&f.confusion) {
            for (t, v) in total_row.iter_mut().zip(row) {
                *t += v;
            }
        }
    }

    let f_values = anova_f_scores(&cache.original, &all_labels)?;
    let f_scores: Vec<FeatureScore> = feature_infos()
        .iter()
        .zip(f_values)
        .map(|(info, f)| FeatureScore {
            name: info.name.clone(),
            group: info.group,
            channel_family: info.channel_family,
            f_score: f,
        })
        .collect();
    let f_score_groups = FeatureGroup::ALL.iter().map(|&g| GroupStats::of(g, &f_scores)).collect();

    let summary = |pick: fn(&FoldResult) -> f64| ScoreSummary::of(&folds.iter().map(pick).collect::<Vec<_>>());
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        limb,
        labels: d.label_set.names().to_vec(),
        voting: summary(|f| f.macro_f1),
        balanced: summary(|f| f.macro_f1_balanced),
        regularized: summary(|f| f.macro_f1_regularized),
        folds,
        confusion_total,
        f_scores,
        f_score_groups,
        config: cfg.clone(),
    })
}

//! Scoring, subject-grouped folds, cross-validation and synthetic data.

pub mod cv;
pub mod folds;
pub mod metrics;
pub mod synth;

pub use cv::{run_cv, EvalReport, FeatureScore, FoldResult, GroupStats, ScoreSummary, REPORT_SCHEMA_VERSION};
pub use folds::{group_kfold, Fold, FoldPlan};
pub use metrics::{confusion_matrix, macro_f1, per_class_f1};
pub use synth::{subject_id, synth_generate, synth_labels, SynthConfig};

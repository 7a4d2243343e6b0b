//! Exercise recognition from wrist and ankle accelerometers.
//!
//! Raw triaxial streams are windowed, optionally augmented with simulated
//! opposite-side placements, turned into a fixed 450-feature vector,
//! quantile-normalized and classified by two soft-voting gradient-boosted
//! tree ensembles. One model is trained per limb.

pub mod augment;
pub mod boosting;
pub mod domain;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod normalize;
pub mod pipeline;

pub use augment::{augment_dataset, AugmentPolicy};
pub use boosting::{soft_vote, train_gbdt, BoostedEnsemble, TrainConfig};
pub use domain::{LabelSet, Limb, Provenance, Side, TriaxialSample, TriaxialWindow, WindowMeta};
pub use error::{Error, Result, ValidationError};
pub use features::{extract_dataset, extract_window, FeatureMatrix, FEATURE_COUNT};
pub use ingest::{WindowConfig, WindowedDataset};
pub use normalize::{fit_quantile, QuantileMap};
pub use pipeline::{train_limb, PipelineConfig, TrainedPipeline};

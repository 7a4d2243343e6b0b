//! Run configuration: a TOML file merged with command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use exrec::augment::AugmentPolicy;
use exrec::boosting::TrainConfig;
use exrec::domain::{LabelSet, Limb};
use exrec::eval::SynthConfig;
use exrec::ingest::{ColumnMap, WindowConfig};
use exrec::pipeline::PipelineConfig;
use exrec::{Error, Result};
use serde::{Deserialize, Serialize};

/// Synthetic cohort size; sampling rate comes from `[window]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_subjects: usize,
    pub n_classes: usize,
    pub seconds_per_class: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        Self {
            n_subjects: d.n_subjects,
            n_classes: d.n_classes,
            seconds_per_class: d.seconds_per_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Required; there is no clock-derived fallback.
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Both limbs when unset.
    pub limb: Option<Limb>,
    pub threads: Option<usize>,
    /// CSV files or directories of CSV files.
    pub inputs: Vec<PathBuf>,
    pub model: Option<PathBuf>,
    /// Class names in index order. Defaults to the 18 workouts plus Null.
    pub labels: Option<Vec<String>>,
    pub columns: ColumnMap,
    pub window: WindowConfig,
    pub augmentation: AugmentPolicy,
    pub n_quantiles: usize,
    pub folds: usize,
    pub balanced: TrainConfig,
    pub regularized: TrainConfig,
    pub synth: SynthSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            seed: None,
            output_dir: None,
            limb: None,
            threads: None,
            inputs: Vec::new(),
            model: None,
            labels: None,
            columns: ColumnMap::default(),
            window: p.window,
            augmentation: p.augmentation,
            n_quantiles: p.n_quantiles,
            folds: p.folds,
            balanced: p.balanced,
            regularized: p.regularized,
            synth: SynthSection::default(),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Parse a config file. Relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.inputs = cfg.inputs.iter().map(|p| resolve(base, p)).collect();
        cfg.model = cfg.model.as_deref().map(|p| resolve(base, p));
        cfg.output_dir = cfg.output_dir.as_deref().map(|p| resolve(base, p));
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required: pass --seed or set `seed` in the config file".into()))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn limbs(&self) -> Vec<Limb> {
        self.limb.map_or_else(|| Limb::ALL.to_vec(), |l| vec![l])
    }

    pub fn label_set(&self) -> Result<LabelSet> {
        match &self.labels {
            Some(names) => LabelSet::new(names.iter().cloned()),
            None => Ok(LabelSet::wear()),
        }
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let cfg = PipelineConfig {
            window: self.window,
            augmentation: self.augmentation.clone(),
            n_quantiles: self.n_quantiles,
            balanced: self.balanced.clone(),
            regularized: self.regularized.clone(),
            folds: self.folds,
            seed: 0,
        }
        .with_seed(self.seed()?);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn synth(&self) -> Result<SynthConfig> {
        Ok(SynthConfig {
            n_subjects: self.synth.n_subjects,
            n_classes: self.synth.n_classes,
            rate: self.window.rate,
            seconds_per_class: self.synth.seconds_per_class,
            seed: self.seed()?,
        })
    }

    /// Input CSVs: files as given, directories expanded to their `*.csv`
    /// entries in name order.
    pub fn input_files(&self) -> Result<Vec<PathBuf>> {
        if self.inputs.is_empty() {
            return Err(Error::Config("no inputs: pass --input or set `inputs` in the config file".into()));
        }
        let mut files = Vec::new();
        for input in &self.inputs {
            if input.is_dir() {
                let mut entries: Vec<PathBuf> = fs::read_dir(input)
                    .map_err(|e| Error::Io { path: input.clone(), source: e })?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
                    .collect();
                if entries.is_empty() {
                    return Err(Error::Config(format!("input directory {} holds no .csv files", input.display())));
                }
                entries.sort();
                files.extend(entries);
            } else if input.is_file() {
                files.push(input.clone());
            } else {
                return Err(Error::Config(format!("input {} does not exist", input.display())));
            }
        }
        Ok(files)
    }
}

//! The 450-feature window representation: 10 derived channels times a
//! 45-feature catalog (27 statistical/temporal, 4 fractal/spectral,
//! 14 higher-order differential).

mod anova;
mod channels;
mod differential;
mod fractal;
mod spectral;
mod stats;

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use anova::{anova_f_scores, f_score};
pub use channels::{derive_channels, wrapped_angle, Channel, ChannelFamily, ChannelSeries};
pub use differential::{diff_n, extract_differential, DIFFERENTIAL_COUNT, DIFFERENTIAL_NAMES};
pub use fractal::{katz_fd, petrosian_fd, KATZ_CAP};
pub use spectral::{dominant_frequencies, magnitude_spectrum};
pub use stats::{extract_statistical, quantile_sorted, STATISTICAL_COUNT, STATISTICAL_NAMES};

use crate::domain::{validate_window, LabelSet, TriaxialWindow, WindowMeta};
use crate::error::{Error, Result};
use crate::ingest::WindowedDataset;

pub const FEATURE_CSV_SCHEMA_VERSION: u32 = 1;

pub const FRACTAL_SPECTRAL_NAMES: [&str; 4] = ["petrosian_fd", "katz_fd", "dominant_freq_1", "dominant_freq_2"];

/// Features per channel.
pub const CATALOG_LEN: usize = STATISTICAL_COUNT + FRACTAL_SPECTRAL_NAMES.len() + DIFFERENTIAL_COUNT;

/// Total features per window.
pub const FEATURE_COUNT: usize = CATALOG_LEN * Channel::ALL.len();

/// Shortest window the catalog accepts (third differences need two points).
pub const MIN_WINDOW_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    StatisticalTemporal,
    FractalSpectral,
    HigherOrderDifferential,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 3] = [
        FeatureGroup::StatisticalTemporal,
        FeatureGroup::FractalSpectral,
        FeatureGroup::HigherOrderDifferential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::StatisticalTemporal => "statistical_temporal",
            FeatureGroup::FractalSpectral => "fractal_spectral",
            FeatureGroup::HigherOrderDifferential => "higher_order_differential",
        }
    }
}

/// Per-channel catalog entries in extraction order.
pub fn catalog() -> impl Iterator<Item = (&'static str, FeatureGroup)> {
    STATISTICAL_NAMES
        .iter()
        .map(|n| (*n, FeatureGroup::StatisticalTemporal))
        .chain(FRACTAL_SPECTRAL_NAMES.iter().map(|n| (*n, FeatureGroup::FractalSpectral)))
        .chain(DIFFERENTIAL_NAMES.iter().map(|n| (*n, FeatureGroup::HigherOrderDifferential)))
}

/// Identity of one of the 450 columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub name: String,
    pub channel: Channel,
    pub channel_family: ChannelFamily,
    pub feature: String,
    pub group: FeatureGroup,
}

/// Column descriptions in canonical order.
pub fn feature_infos() -> &'static [FeatureInfo] {
    static INFOS: OnceLock<Vec<FeatureInfo>> = OnceLock::new();
    INFOS.get_or_init(|| {
        Channel::ALL
            .iter()
            .flat_map(|&channel| {
                catalog().map(move |(feature, group)| FeatureInfo {
                    name: format!("{}__{}", channel.name(), feature),
                    channel,
                    channel_family: channel.family(),
                    feature: feature.to_string(),
                    group,
                })
            })
            .collect()
    })
}

/// Canonical `<channel>__<feature>` names, shared by every vector and matrix.
pub fn feature_names() -> Arc<[String]> {
    static NAMES: OnceLock<Arc<[String]>> = OnceLock::new();
    NAMES
        .get_or_init(|| feature_infos().iter().map(|i| i.name.clone()).collect())
        .clone()
}

/// The 45 catalog values of one channel series.
pub fn extract_channel(values: &[f64], rate: f64) -> Result<[f64; CATALOG_LEN]> {
    let mut out = [0.0; CATALOG_LEN];
    out[..STATISTICAL_COUNT].copy_from_slice(&extract_statistical(values, rate));
    let (f1, f2) = dominant_frequencies(values, rate);
    out[STATISTICAL_COUNT..STATISTICAL_COUNT + 4].copy_from_slice(&[petrosian_fd(values), katz_fd(values), f1, f2]);
    out[STATISTICAL_COUNT + 4..].copy_from_slice(&extract_differential(values)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub names: Arc<[String]>,
    pub values: Vec<f64>,
    /// Non-finite intermediates replaced by 0.
    pub replaced: usize,
}

/// Extract all 450 features of a window.
pub fn extract_window(w: &TriaxialWindow, rate: f64) -> Result<FeatureVector> {
    validate_window(w, w.len()).map_err(|source| Error::Validation { window: 0, source })?;
    if w.len() < MIN_WINDOW_LEN {
        return Err(Error::InsufficientData(format!(
            "window of {} samples; feature extraction needs at least {MIN_WINDOW_LEN}",
            w.len()
        )));
    }
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    for series in derive_channels(w) {
        values.extend_from_slice(&extract_channel(&series.values, rate)?);
    }
    let mut replaced = 0;
    for v in values.iter_mut().filter(|v| !v.is_finite()) {
        *v = 0.0;
        replaced += 1;
    }
    Ok(FeatureVector {
        names: feature_names(),
        values,
        replaced,
    })
}

/// Row-major feature table with optional per-row window metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    names: Arc<[String]>,
    data: Vec<f64>,
    meta: Vec<WindowMeta>,
}

impl FeatureMatrix {
    pub fn from_rows(names: Vec<String>, rows: Vec<Vec<f64>>, meta: Vec<WindowMeta>) -> Result<Self> {
        let n_cols = names.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_cols) {
            return Err(Error::Schema(format!("row {i} has {} values, expected {n_cols}", r.len())));
        }
        let n_rows = rows.len();
        Self::from_flat(names.into(), rows.into_iter().flatten().collect(), n_rows, meta)
    }

    pub fn from_flat(names: Arc<[String]>, data: Vec<f64>, n_rows: usize, meta: Vec<WindowMeta>) -> Result<Self> {
        if data.len() != n_rows * names.len() {
            return Err(Error::Schema(format!(
                "{} values do not fill {n_rows} rows of {} columns",
                data.len(),
                names.len()
            )));
        }
        if !meta.is_empty() && meta.len() != n_rows {
            return Err(Error::Schema(format!("{} metadata entries for {n_rows} rows", meta.len())));
        }
        Ok(Self { names, data, meta })
    }

    pub fn names(&self) -> &Arc<[String]> {
        &self.names
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn n_rows(&self) -> usize {
        if self.names.is_empty() {
            0
        } else {
            self.data.len() / self.names.len()
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_cols();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols().max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn meta(&self) -> &[WindowMeta] {
        &self.meta
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// New matrix of the given rows in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let meta = if self.meta.is_empty() {
            Vec::new()
        } else {
            indices.iter().map(|&i| self.meta[i].clone()).collect()
        };
        FeatureMatrix {
            names: self.names.clone(),
            data,
            meta,
        }
    }

    /// Stack matrices with identical columns.
    pub fn concat(parts: &[&FeatureMatrix]) -> Result<FeatureMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InsufficientData("nothing to concatenate".into()))?;
        let mut data = Vec::new();
        let mut meta = Vec::new();
        for p in parts {
            if p.names != first.names {
                return Err(Error::Schema("cannot concatenate matrices with different columns".into()));
            }
            data.extend_from_slice(&p.data);
            meta.extend_from_slice(&p.meta);
        }
        let n_rows = data.len() / first.n_cols().max(1);
        FeatureMatrix::from_flat(first.names.clone(), data, n_rows, meta)
    }

    /// Apply `f` to every value in place, column index supplied.
    pub fn map_in_place(&mut self, f: impl Fn(usize, f64) -> f64 + Sync) {
        let n = self.n_cols().max(1);
        self.data.par_chunks_mut(n).for_each(|row| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(j, *v);
            }
        });
    }

    pub fn labels(&self) -> Vec<usize> {
        self.meta.iter().map(|m| m.label).collect()
    }
}

/// Feature matrix of a dataset plus the count of replaced non-finite values.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub matrix: FeatureMatrix,
    pub replaced: usize,
}

/// Extract every window in parallel; row order matches window order.
pub fn extract_dataset(d: &WindowedDataset, rate: f64) -> Result<Extraction> {
    let rows = d
        .windows
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            extract_window(w, rate).map_err(|e| match e {
                Error::Validation { source, .. } => Error::Validation { window: i, source },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let replaced = rows.iter().map(|r| r.replaced).sum();
    if replaced > 0 {
        log::warn!("replaced {replaced} non-finite feature values with 0");
    }
    let n_rows = rows.len();
    let data = rows.into_iter().flat_map(|r| r.values).collect();
    let meta = d.windows.iter().map(|w| w.meta.clone()).collect();
    Ok(Extraction {
        matrix: FeatureMatrix::from_flat(feature_names(), data, n_rows, meta)?,
        replaced,
    })
}

/// Write metadata columns then the feature columns.
pub fn write_feature_csv(path: &Path, m: &FeatureMatrix, labels: &LabelSet) -> Result<()> {
    if m.meta().len() != m.n_rows() {
        return Err(Error::Schema("feature export requires per-row metadata".into()));
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "# schema_version={FEATURE_CSV_SCHEMA_VERSION}").map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = vec!["subject", "limb", "side", "label", "provenance"];
    header.extend(m.names().iter().map(String::as_str));
    writer.write_record(&header)?;
    for (row, meta) in m.rows().zip(m.meta()) {
        let mut record = vec![
            meta.subject.clone(),
            meta.limb.to_string(),
            meta.side.to_string(),
            labels.name(meta.label).unwrap_or_default().to_string(),
            meta.provenance.to_string(),
        ];
        record.extend(row.iter().map(|v| v.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CatalogSidecar {
    pub schema_version: u32,
    pub feature_count: usize,
    pub features: Vec<FeatureInfo>,
}

pub fn catalog_sidecar() -> CatalogSidecar {
    CatalogSidecar {
        schema_version: FEATURE_CSV_SCHEMA_VERSION,
        feature_count: FEATURE_COUNT,
        features: feature_infos().to_vec(),
    }
}

pub fn write_catalog_json(path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(file, &catalog_sidecar())?;
    Ok(())
}

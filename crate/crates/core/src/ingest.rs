//! Reading wide sensor CSVs, cutting streams into labeled windows and
//! fusing left/right sides into per-limb datasets.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    validate_window, LabelSet, Limb, Provenance, Side, TriaxialSample, TriaxialWindow, WindowMeta,
    NULL_LABEL,
};
use crate::error::{Error, Result};

pub const WINDOW_CSV_SCHEMA_VERSION: u32 = 1;
pub const WIDE_CSV_SCHEMA_VERSION: u32 = 1;

/// Accelerometer columns of one wear position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionColumns {
    pub limb: Limb,
    pub side: Side,
    pub x: String,
    pub y: String,
    pub z: String,
}

impl PositionColumns {
    fn standard(side: Side, limb: Limb) -> Self {
        let prefix = format!("{side}_{limb}_acc");
        Self {
            limb,
            side,
            x: format!("{prefix}_x"),
            y: format!("{prefix}_y"),
            z: format!("{prefix}_z"),
        }
    }
}

/// Header names for the wide CSV layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub subject: String,
    pub label: String,
    /// Optional timestamp column in seconds. Without it times are `row / rate`.
    pub time: Option<String>,
    pub positions: Vec<PositionColumns>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            subject: "sbj_id".into(),
            label: "label".into(),
            time: None,
            positions: vec![
                PositionColumns::standard(Side::Right, Limb::Arm),
                PositionColumns::standard(Side::Left, Limb::Arm),
                PositionColumns::standard(Side::Right, Limb::Leg),
                PositionColumns::standard(Side::Left, Limb::Leg),
            ],
        }
    }
}

/// Continuous recording of one sensor position for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorStream {
    pub subject: String,
    pub limb: Limb,
    pub side: Side,
    pub samples: Vec<TriaxialSample>,
    /// Per-sample class index, same length as `samples`.
    pub labels: Vec<usize>,
}

impl SensorStream {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions<'a> {
    pub rate: f64,
    pub labels: &'a LabelSet,
    /// When false a missing label column yields all-Null streams (prediction input).
    pub require_label: bool,
}

fn label_index(labels: &LabelSet, raw: &str) -> Option<usize> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("nan") {
        return labels.index_of(NULL_LABEL);
    }
    labels
        .index_of(raw)
        .or_else(|| labels.index_of(&raw.to_ascii_lowercase()))
}

/// Parse a wide CSV into up to four streams per subject (one per limb and side).
///
/// Streams are ordered by subject first appearance, then by the column map's
/// position order. Rows keep file order.
pub fn parse_wide_csv(path: &Path, map: &ColumnMap, opts: &ParseOptions<'_>) -> Result<Vec<SensorStream>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("{}: missing column '{name}'", path.display())))
    };

    let subject_col = column(&map.subject)?;
    let label_col = match column(&map.label) {
        Ok(c) => Some(c),
        Err(e) if opts.require_label => return Err(e),
        Err(_) => None,
    };
    let time_col = map.time.as_deref().map(column).transpose()?;
    let position_cols = map
        .positions
        .iter()
        .map(|p| Ok([column(&p.x)?, column(&p.y)?, column(&p.z)?]))
        .collect::<Result<Vec<_>>>()?;
    let null = opts.labels.index_of(NULL_LABEL);

    let mut order: Vec<String> = Vec::new();
    let mut by_subject: HashMap<String, Vec<SensorStream>> = HashMap::new();

    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |idx: usize| record.get(idx).unwrap_or("");
        let number = |idx: usize| -> Result<f64> {
            let raw = cell(idx);
            raw.parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("column '{}': cannot parse '{raw}' as a number", &headers[idx]),
            })
        };

        let subject = cell(subject_col).to_string();
        let label = match label_col {
            Some(c) => label_index(opts.labels, cell(c)).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("label '{}' is not in the label set", cell(c)),
            })?,
            None => null.ok_or_else(|| {
                Error::Config(format!("label set has no '{NULL_LABEL}' class for unlabeled input"))
            })?,
        };

        let streams = by_subject.entry(subject.clone()).or_insert_with(|| {
            order.push(subject.clone());
            map.positions
                .iter()
                .map(|p| SensorStream {
                    subject: subject.clone(),
                    limb: p.limb,
                    side: p.side,
                    samples: Vec::new(),
                    labels: Vec::new(),
                })
                .collect()
        });
        let t = match time_col {
            Some(c) => number(c)?,
            None => streams[0].samples.len() as f64 / opts.rate,
        };
        for (stream, cols) in streams.iter_mut().zip(&position_cols) {
            stream
                .samples
                .push(TriaxialSample::new(t, number(cols[0])?, number(cols[1])?, number(cols[2])?));
            stream.labels.push(label);
        }
    }

    Ok(order
        .into_iter()
        .flat_map(|s| by_subject.remove(&s).unwrap_or_default())
        .collect())
}

/// Write one subject's streams in the wide layout read by [`parse_wide_csv`].
///
/// Needs one stream per position of `map`, all of equal length; labels come
/// from the first stream. A `time` column is written only if `map` names one.
pub fn write_wide_csv(path: &Path, streams: &[SensorStream], map: &ColumnMap, labels: &LabelSet) -> Result<()> {
    let ordered = map
        .positions
        .iter()
        .map(|p| {
            streams
                .iter()
                .find(|s| s.limb == p.limb && s.side == p.side)
                .ok_or_else(|| Error::InsufficientData(format!("no {} {} stream to write", p.side, p.limb)))
        })
        .collect::<Result<Vec<_>>>()?;
    let Some(first) = ordered.first() else {
        return Err(Error::Config("column map has no positions".into()));
    };
    if ordered.iter().any(|s| s.len() != first.len() || s.subject != first.subject) {
        return Err(Error::Invariant("streams of one file must share subject and length".into()));
    }

    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "# schema_version={WIDE_CSV_SCHEMA_VERSION}").map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header = vec![map.subject.clone(), map.label.clone()];
    header.extend(map.time.iter().cloned());
    for p in &map.positions {
        header.extend([p.x.clone(), p.y.clone(), p.z.clone()]);
    }
    writer.write_record(&header)?;
    for i in 0..first.len() {
        let label = labels
            .name(first.labels[i])
            .ok_or_else(|| Error::Invariant(format!("class index {} outside the label set", first.labels[i])))?;
        let mut row = vec![first.subject.clone(), label.to_string()];
        if map.time.is_some() {
            row.push(first.samples[i].t.to_string());
        }
        for s in &ordered {
            let sample = &s.samples[i];
            row.extend([sample.ax.to_string(), sample.ay.to_string(), sample.az.to_string()]);
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub rate: f64,
    pub window_seconds: f64,
    /// Fraction in `[0, 1)`.
    pub overlap: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            rate: crate::domain::DEFAULT_RATE,
            window_seconds: crate::domain::DEFAULT_WINDOW_SECONDS,
            overlap: 0.0,
        }
    }
}

impl WindowConfig {
    /// Samples per window. Errors unless `rate * window_seconds` is a positive integer.
    pub fn window_len(&self) -> Result<usize> {
        let exact = self.rate * self.window_seconds;
        let rounded = exact.round();
        if !exact.is_finite() || rounded < 1.0 || (exact - rounded).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "rate {} Hz x {} s = {exact} is not a positive whole number of samples",
                self.rate, self.window_seconds
            )));
        }
        Ok(rounded as usize)
    }

    pub fn stride(&self) -> Result<usize> {
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Config(format!("overlap {} outside [0, 1)", self.overlap)));
        }
        let len = self.window_len()?;
        Ok(((len as f64 * (1.0 - self.overlap)).round() as usize).max(1))
    }
}

/// Majority label of a window; ties resolve to the center sample's label when it
/// is among the tied classes, otherwise to the lowest tied class index.
fn majority_label(labels: &[usize]) -> usize {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let center = labels[labels.len() / 2];
    if counts.get(&center) == Some(&best) {
        return center;
    }
    counts
        .into_iter()
        .filter(|&(_, c)| c == best)
        .map(|(l, _)| l)
        .min()
        .unwrap_or(center)
}

/// Split a stream into windows of exactly `window_len` samples.
///
/// Sessions separated by a time gap above two sample periods are windowed
/// independently and trailing remainders are dropped. Windows holding
/// non-finite samples are skipped.
pub fn window_stream(s: &SensorStream, cfg: &WindowConfig) -> Result<Vec<TriaxialWindow>> {
    let len = cfg.window_len()?;
    let stride = cfg.stride()?;
    if s.samples.len() != s.labels.len() {
        return Err(Error::Invariant(format!(
            "stream {}/{}/{} has {} samples but {} labels",
            s.subject,
            s.limb,
            s.side,
            s.samples.len(),
            s.labels.len()
        )));
    }
    let max_gap = 2.0 / cfg.rate;
    let mut windows = Vec::new();
    let mut skipped = 0usize;

    let mut session_start = 0;
    while session_start < s.samples.len() {
        let mut session_end = session_start + 1;
        while session_end < s.samples.len()
            && s.samples[session_end].t - s.samples[session_end - 1].t <= max_gap
        {
            session_end += 1;
        }

        let mut start = session_start;
        while start + len <= session_end {
            let w = TriaxialWindow {
                meta: WindowMeta {
                    subject: s.subject.clone(),
                    limb: s.limb,
                    side: s.side,
                    label: majority_label(&s.labels[start..start + len]),
                    provenance: Provenance::Original,
                },
                samples: s.samples[start..start + len].to_vec(),
            };
            if validate_window(&w, len).is_ok() {
                windows.push(w);
            } else {
                skipped += 1;
            }
            start += stride;
        }
        session_start = session_end;
    }
    if skipped > 0 {
        log::warn!(
            "{}/{}/{}: skipped {skipped} windows with invalid samples",
            s.subject,
            s.limb,
            s.side
        );
    }
    Ok(windows)
}

/// Windows plus the label set their class indices refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub windows: Vec<TriaxialWindow>,
    pub label_set: LabelSet,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Distinct subjects, sorted.
    pub fn subjects(&self) -> Vec<String> {
        let mut subjects: Vec<String> = self.windows.iter().map(|w| w.meta.subject.clone()).collect();
        subjects.sort();
        subjects.dedup();
        subjects
    }
}

/// Window every stream; output keeps stream order.
pub fn window_streams(streams: &[SensorStream], cfg: &WindowConfig, label_set: LabelSet) -> Result<WindowedDataset> {
    let per_stream = streams
        .par_iter()
        .map(|s| window_stream(s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let windows: Vec<TriaxialWindow> = per_stream.into_iter().flatten().collect();
    if let Some(w) = windows.iter().find(|w| w.meta.label >= label_set.len()) {
        return Err(Error::Schema(format!(
            "window label {} outside label set of {}",
            w.meta.label,
            label_set.len()
        )));
    }
    Ok(WindowedDataset { windows, label_set })
}

/// All windows of one limb, both sides, sorted by subject, side, then start time.
pub fn fuse_sides(d: &WindowedDataset, limb: Limb) -> WindowedDataset {
    let mut windows: Vec<TriaxialWindow> = d.windows.iter().filter(|w| w.meta.limb == limb).cloned().collect();
    windows.sort_by(|a, b| {
        a.meta
            .subject
            .cmp(&b.meta.subject)
            .then(a.meta.side.cmp(&b.meta.side))
            .then(a.start_time().total_cmp(&b.start_time()))
    });
    WindowedDataset {
        windows,
        label_set: d.label_set.clone(),
    }
}

/// Write windows as CSV: metadata columns then `x,y,z` per sample.
pub fn write_windows_csv(path: &Path, d: &WindowedDataset) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "# schema_version={WINDOW_CSV_SCHEMA_VERSION}").map_err(|e| Error::io(path, e))?;
    let len = d.windows.first().map_or(0, TriaxialWindow::len);
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<String> = ["subject", "limb", "side", "label", "provenance", "window_index"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for i in 0..len {
        for axis in ["x", "y", "z"] {
            header.push(format!("s{i}_{axis}"));
        }
    }
    writer.write_record(&header)?;
    for (index, w) in d.windows.iter().enumerate() {
        if w.len() != len {
            return Err(Error::Invariant(format!("window {index} has {} samples, expected {len}", w.len())));
        }
        let mut row = vec![
            w.meta.subject.clone(),
            w.meta.limb.to_string(),
            w.meta.side.to_string(),
            d.label_set.name(w.meta.label).unwrap_or_default().to_string(),
            w.meta.provenance.to_string(),
            index.to_string(),
        ];
        for s in &w.samples {
            row.extend([s.ax.to_string(), s.ay.to_string(), s.az.to_string()]);
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read a window dump produced by [`write_windows_csv`]. Sample times are
/// reconstructed as `i / rate` from each window's start.
pub fn read_windows_csv(path: &Path, label_set: &LabelSet, rate: f64) -> Result<WindowedDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let fixed = ["subject", "limb", "side", "label", "provenance", "window_index"];
    for (i, name) in fixed.iter().enumerate() {
        if headers.get(i) != Some(*name) {
            return Err(Error::Schema(format!("{}: expected column '{name}' at position {i}", path.display())));
        }
    }
    let sample_cols = headers.len() - fixed.len();
    if sample_cols == 0 || !sample_cols.is_multiple_of(3) {
        return Err(Error::Schema(format!(
            "{}: {sample_cols} sample columns is not a positive multiple of 3",
            path.display()
        )));
    }
    let len = sample_cols / 3;

    let mut windows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let label = label_index(label_set, &record[3])
            .ok_or_else(|| parse_err(format!("label '{}' is not in the label set", &record[3])))?;
        let limb = record[1].parse::<Limb>().map_err(|e| parse_err(e.to_string()))?;
        let side = record[2].parse::<Side>().map_err(|e| parse_err(e.to_string()))?;
        let provenance = record[4].parse::<Provenance>().map_err(|e| parse_err(e.to_string()))?;
        let index: f64 = record[5]
            .parse()
            .map_err(|_| parse_err(format!("bad window_index '{}'", &record[5])))?;
        let mut samples = Vec::with_capacity(len);
        for i in 0..len {
            let mut axes = [0.0; 3];
            for (a, slot) in axes.iter_mut().enumerate() {
                let col = fixed.len() + 3 * i + a;
                *slot = record[col]
                    .parse()
                    .map_err(|_| parse_err(format!("column '{}': cannot parse '{}'", &headers[col], &record[col])))?;
            }
            let t = (index * len as f64 + i as f64) / rate;
            samples.push(TriaxialSample::new(t, axes[0], axes[1], axes[2]));
        }
        windows.push(TriaxialWindow {
            meta: WindowMeta {
                subject: record[0].to_string(),
                limb,
                side,
                label,
                provenance,
            },
            samples,
        });
    }
    Ok(WindowedDataset {
        windows,
        label_set: label_set.clone(),
    })
}

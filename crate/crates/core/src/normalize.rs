//! Rank-based quantile normalization to a uniform `[0, 1]` output.

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{quantile_sorted, FeatureMatrix};

pub const DEFAULT_N_QUANTILES: usize = 1000;
pub const QUANTILE_MAP_SCHEMA_VERSION: u32 = 1;

/// Per-column reference quantiles at evenly spaced probability levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileMap {
    pub schema_version: u32,
    pub names: Vec<String>,
    pub references: Vec<Vec<f64>>,
}

/// Fit reference quantiles on (training) rows. Levels are clamped to the row count.
pub fn fit_quantile(m: &FeatureMatrix, n_quantiles: usize) -> Result<QuantileMap> {
    if m.n_rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "quantile fit needs at least 2 rows, got {}",
            m.n_rows()
        )));
    }
    if n_quantiles < 2 {
        return Err(Error::Config(format!("n_quantiles must be at least 2, got {n_quantiles}")));
    }
    let levels = n_quantiles.min(m.n_rows());
    let references = (0..m.n_cols())
        .into_par_iter()
        .map(|j| {
            let mut col = m.column(j);
            col.sort_by(f64::total_cmp);
            (0..levels)
                .map(|i| quantile_sorted(&col, i as f64 / (levels - 1) as f64))
                .collect()
        })
        .collect();
    Ok(QuantileMap {
        schema_version: QUANTILE_MAP_SCHEMA_VERSION,
        names: m.names().to_vec(),
        references,
    })
}

/// Cumulative probability of `v` against sorted references.
///
/// Between references the level is interpolated linearly; a value equal to a
/// run of tied references takes the midpoint of their levels.
pub fn transform_value(refs: &[f64], v: f64) -> f64 {
    let n = refs.len();
    let (first, last) = (refs[0], refs[n - 1]);
    if first == last {
        return 0.5;
    }
    if v < first {
        return 0.0;
    }
    if v > last {
        return 1.0;
    }
    let below = refs.partition_point(|&r| r < v);
    let at_or_below = refs.partition_point(|&r| r <= v);
    let step = (n - 1) as f64;
    if at_or_below > below {
        return (below + at_or_below - 1) as f64 / 2.0 / step;
    }
    let (lo, hi) = (refs[below - 1], refs[below]);
    let frac = (v - lo) / (hi - lo);
    ((below - 1) as f64 + frac) / step
}

impl QuantileMap {
    pub fn n_cols(&self) -> usize {
        self.references.len()
    }

    /// Map every value through its column's reference quantiles.
    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.names().len() != self.names.len() || m.names().iter().zip(&self.names).any(|(a, b)| a != b) {
            return Err(Error::Schema(format!(
                "feature columns do not match the quantile map ({} vs {} columns)",
                m.n_cols(),
                self.names.len()
            )));
        }
        let mut out = m.clone();
        out.map_in_place(|j, v| transform_value(&self.references[j], v));
        Ok(out)
    }

    /// Transform a single row in place.
    pub fn transform_row(&self, row: &mut [f64]) -> Result<()> {
        if row.len() != self.references.len() {
            return Err(Error::Schema(format!(
                "row of {} values against a map of {} columns",
                row.len(),
                self.references.len()
            )));
        }
        for (v, refs) in row.iter_mut().zip(&self.references) {
            *v = transform_value(refs, *v);
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let map: QuantileMap = serde_json::from_reader(std::io::BufReader::new(file))?;
        if map.schema_version != QUANTILE_MAP_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "quantile map schema version {} (expected {QUANTILE_MAP_SCHEMA_VERSION})",
                map.schema_version
            )));
        }
        Ok(map)
    }
}

/// Convenience wrapper around [`QuantileMap::transform`].
pub fn transform(q: &QuantileMap, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    q.transform(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_rows(vec!["f".into()], values.iter().map(|v| vec![*v]).collect(), Vec::new()).unwrap()
    }

    #[test]
    fn order_statistics_as_references() {
        let q = fit_quantile(&column(&[3.0, 1.0, 5.0, 2.0, 4.0]), 5).unwrap();
        assert_eq!(q.references[0], vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let constant = fit_quantile(&column(&[7.0, 7.0, 7.0]), 1000).unwrap();
        assert_eq!(constant.references[0], vec![7.0; 3]);
    }

    #[test]
    fn levels_clamp_to_rows() {
        let q = fit_quantile(&column(&[1.0, 2.0, 3.0]), 1000).unwrap();
        assert_eq!(q.references[0].len(), 3);
        assert!(fit_quantile(&column(&[1.0]), 10).is_err());
    }

    #[test]
    fn transform_examples() {
        let refs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(transform_value(&refs, 3.0), 0.5);
        assert_eq!(transform_value(&refs, 100.0), 1.0);
        assert_eq!(transform_value(&refs, 1.0), 0.0);
        assert_eq!(transform_value(&refs, -3.0), 0.0);
        assert_eq!(transform_value(&refs, 2.5), 0.375);
        assert_eq!(transform_value(&[7.0, 7.0, 7.0], 9.0), 0.5);
        // Tied run at indices 1..=3 of 5 references.
        assert_eq!(transform_value(&[0.0, 1.0, 1.0, 1.0, 2.0], 1.0), 0.5);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let q = fit_quantile(&column(&[1.0, 2.0]), 10).unwrap();
        let other = FeatureMatrix::from_rows(vec!["g".into()], vec![vec![1.0]], Vec::new()).unwrap();
        assert!(matches!(q.transform(&other), Err(Error::Schema(_))));
    }

    #[test]
    fn round_trips_through_json() {
        let q = fit_quantile(&column(&[0.5, 1.5, 9.0, -2.0]), 4).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        q.save(f.path()).unwrap();
        assert_eq!(QuantileMap::load(f.path()).unwrap(), q);
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(
            train in prop::collection::vec(-1e3f64..1e3, 2..200),
            a in -2e3f64..2e3,
            b in -2e3f64..2e3,
        ) {
            let q = fit_quantile(&column(&train), 50).unwrap();
            let refs = &q.references[0];
            prop_assert!(refs.windows(2).all(|w| w[0] <= w[1]));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (tl, th) = (transform_value(refs, lo), transform_value(refs, hi));
            prop_assert!(tl <= th);
            prop_assert!((0.0..=1.0).contains(&tl) && (0.0..=1.0).contains(&th));
        }
    }
}

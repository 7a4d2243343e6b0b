use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Largest supported bin count (bin indices are stored as `u8`).
pub const MAX_BINS_LIMIT: usize = 256;

/// Per-feature bin upper edges. A value lands in the first bin whose
/// threshold is `>=` the value; values above every threshold go to the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub thresholds: Vec<Vec<f64>>,
}

/// Point strictly between `a < b` that keeps `a` on the left and `b` on the right.
fn cut_point(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid >= b {
        a
    } else {
        mid
    }
}

fn column_thresholds(mut values: Vec<f64>, max_bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    let distinct = values.len();
    if distinct <= max_bins {
        return values.windows(2).map(|w| cut_point(w[0], w[1])).collect();
    }
    // Equal numbers of distinct values per bin.
    (1..max_bins)
        .map(|i| {
            let first_of_next = i * distinct / max_bins;
            cut_point(values[first_of_next - 1], values[first_of_next])
        })
        .collect()
}

/// Fit bin edges on quantiles of each column's distinct values.
pub fn fit_bins(m: &FeatureMatrix, max_bins: usize) -> Result<BinMapper> {
    if m.n_rows() < 2 {
        return Err(Error::InsufficientData(format!("binning needs at least 2 rows, got {}", m.n_rows())));
    }
    if !(2..=MAX_BINS_LIMIT).contains(&max_bins) {
        return Err(Error::Config(format!("max_bins must be in 2..={MAX_BINS_LIMIT}, got {max_bins}")));
    }
    let thresholds = (0..m.n_cols())
        .into_par_iter()
        .map(|j| column_thresholds(m.column(j), max_bins))
        .collect();
    Ok(BinMapper { thresholds })
}

impl BinMapper {
    pub fn n_features(&self) -> usize {
        self.thresholds.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.thresholds[feature].len() + 1
    }

    pub fn bin(&self, feature: usize, value: f64) -> u8 {
        self.thresholds[feature].partition_point(|&t| t < value) as u8
    }

    /// Column-major bin codes for every value of `m`.
    pub fn bin_matrix(&self, m: &FeatureMatrix) -> BinnedMatrix {
        let n_rows = m.n_rows();
        let codes: Vec<Vec<u8>> = (0..self.n_features())
            .into_par_iter()
            .map(|j| m.rows().map(|r| self.bin(j, r[j])).collect())
            .collect();
        BinnedMatrix {
            n_rows,
            codes: codes.concat(),
        }
    }
}

/// Column-major `u8` bin codes.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    codes: Vec<u8>,
}

impl BinnedMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn column(&self, feature: usize) -> &[u8] {
        &self.codes[feature * self.n_rows..(feature + 1) * self.n_rows]
    }
}

//! Statistics of the second and third finite differences.

use super::fractal::katz_fd;
use super::stats::{mean, median, std_dev};
use crate::error::{Error, Result};

pub const DIFFERENTIAL_COUNT: usize = 14;

pub const DIFFERENTIAL_NAMES: [&str; DIFFERENTIAL_COUNT] = [
    "d2_mean",
    "d2_median",
    "d2_std",
    "d2_mean_abs",
    "d2_median_abs",
    "d2_std_abs",
    "d2_katz_fd",
    "d3_mean",
    "d3_median",
    "d3_std",
    "d3_mean_abs",
    "d3_median_abs",
    "d3_std_abs",
    "d3_katz_fd",
];

/// n-fold first difference; output length `len - n`.
pub fn diff_n(s: &[f64], n: usize) -> Result<Vec<f64>> {
    if s.len() <= n {
        return Err(Error::InsufficientData(format!(
            "insufficient samples: order-{n} difference of {} samples",
            s.len()
        )));
    }
    let mut out = s.to_vec();
    for _ in 0..n {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

fn block(d: &[f64]) -> [f64; 7] {
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    [
        mean(d),
        median(d),
        std_dev(d),
        mean(&abs),
        median(&abs),
        std_dev(&abs),
        katz_fd(d),
    ]
}

pub fn extract_differential(s: &[f64]) -> Result<[f64; DIFFERENTIAL_COUNT]> {
    let d2 = diff_n(s, 2)?;
    let d3 = diff_n(s, 3)?;
    let mut out = [0.0; DIFFERENTIAL_COUNT];
    out[..7].copy_from_slice(&block(&d2));
    out[7..].copy_from_slice(&block(&d3));
    Ok(out)
}

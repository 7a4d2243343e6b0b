//! Dominant frequencies from the one-sided magnitude spectrum.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Top two spectral peaks `(f1, f2)` in Hz of the mean-removed signal, DC
/// excluded, no taper. Ties go to the lower frequency. A flat spectrum gives
/// `(0, 0)`; a spectrum with a single nonzero bin gives `(f1, 0)`.
pub fn dominant_frequencies(s: &[f64], rate: f64) -> (f64, f64) {
    let n = s.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let mags = magnitude_spectrum(s);
    let floor = 1e-9 * s.iter().fold(1.0f64, |m, v| m.max(v.abs())) * n as f64;

    let mut order: Vec<usize> = (1..mags.len()).collect();
    order.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
    let freq = |k: usize| k as f64 * rate / n as f64;
    match order.as_slice() {
        [first, second, ..] if mags[*first] > floor => {
            (freq(*first), if mags[*second] > floor { freq(*second) } else { 0.0 })
        }
        [first] if mags[*first] > floor => (freq(*first), 0.0),
        _ => (0.0, 0.0),
    }
}

/// Magnitudes of bins `0..=n/2` of the mean-removed signal.
pub fn magnitude_spectrum(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    let mean = s.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = s.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm()).collect()
}

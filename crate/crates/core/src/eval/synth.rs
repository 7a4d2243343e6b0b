//! Synthetic wrist/ankle recordings with class-specific motion signatures.
//!
//! Every class gets its own oscillation frequency, amplitude, motion axis and
//! resting posture; class 0 is a Null class of near-still noise. Subjects
//! jitter those parameters, and left-side sensors are mirrored the way a
//! contralateral watch would be.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{LabelSet, Limb, Side, TriaxialSample, NULL_LABEL};
use crate::error::{Error, Result};
use crate::ingest::SensorStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_subjects: usize,
    /// Total classes including Null.
    pub n_classes: usize,
    pub rate: f64,
    pub seconds_per_class: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 10,
            n_classes: 4,
            rate: 50.0,
            seconds_per_class: 60.0,
            seed: 0,
        }
    }
}

/// `null`, `activity_1`, ...
pub fn synth_labels(n_classes: usize) -> Result<LabelSet> {
    LabelSet::new(std::iter::once(NULL_LABEL.to_string()).chain((1..n_classes).map(|c| format!("activity_{c}"))))
}

pub fn subject_id(i: usize) -> String {
    format!("{i:02}")
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

struct Signature {
    freq: f64,
    amplitude: f64,
    axis: [f64; 3],
    gravity: [f64; 3],
}

/// Nominal signature of class `c` on a limb.
fn signature(c: usize, limb: Limb) -> Signature {
    let cf = c as f64;
    let limb_shift = match limb {
        Limb::Arm => 0.0,
        Limb::Leg => 0.7,
    };
    if c == 0 {
        return Signature {
            freq: 0.0,
            amplitude: 0.0,
            axis: [1.0, 0.0, 0.0],
            gravity: unit([0.1, -0.2, 1.0]),
        };
    }
    let theta = 1.3 * cf + limb_shift;
    let phi = 0.9 * cf + 0.4 + limb_shift;
    Signature {
        freq: 0.6 + 1.1 * cf,
        amplitude: 0.35 + 0.25 * cf,
        axis: unit([theta.cos(), theta.sin(), 0.5 * (2.0 * theta).cos()]),
        gravity: unit([phi.cos() * phi.sin(), phi.sin(), phi.cos()]),
    }
}

/// Labeled streams for every subject, limb and side. Each stream plays the
/// classes back to back, `seconds_per_class` each.
pub fn synth_generate(cfg: &SynthConfig) -> Result<(Vec<SensorStream>, LabelSet)> {
    if cfg.n_subjects == 0 {
        return Err(Error::Config("n_subjects must be at least 1".into()));
    }
    if cfg.n_classes < 2 {
        return Err(Error::Config("n_classes must be at least 2 (Null plus one activity)".into()));
    }
    if !(cfg.rate > 0.0 && cfg.seconds_per_class > 0.0) {
        return Err(Error::Config("rate and seconds_per_class must be positive".into()));
    }
    let labels = synth_labels(cfg.n_classes)?;
    let per_class = (cfg.rate * cfg.seconds_per_class).round() as usize;
    let noise = Normal::new(0.0, 0.04).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut streams = Vec::with_capacity(cfg.n_subjects * 4);

    for subject in 0..cfg.n_subjects {
        let id = subject_id(subject);
        for limb in Limb::ALL {
            // Per-subject style shared by both sides of a limb.
            let style: Vec<(f64, f64, f64)> = (0..cfg.n_classes)
                .map(|_| {
                    (
                        rng.random_range(0.95..1.05),
                        rng.random_range(0.85..1.15),
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
                .collect();
            for side in Side::ALL {
                let mut samples = Vec::with_capacity(per_class * cfg.n_classes);
                let mut stream_labels = Vec::with_capacity(per_class * cfg.n_classes);
                for (c, &(freq_scale, amp_scale, phase)) in style.iter().enumerate() {
                    let sig = signature(c, limb);
                    let (freq, amp) = (sig.freq * freq_scale, sig.amplitude * amp_scale);
                    for i in 0..per_class {
                        let idx = samples.len();
                        let t = idx as f64 / cfg.rate;
                        let local = i as f64 / cfg.rate;
                        let wave = amp * ((2.0 * PI * freq * local + phase).sin() + 0.35 * (4.0 * PI * freq * local + 2.0 * phase).sin());
                        let mut v: [f64; 3] =
                            std::array::from_fn(|a| sig.gravity[a] + sig.axis[a] * wave + noise.sample(&mut rng));
                        if side == Side::Left {
                            match limb {
                                Limb::Arm => v[0] = -v[0],
                                Limb::Leg => v[1] = -v[1],
                            }
                        }
                        samples.push(TriaxialSample::new(t, v[0], v[1], v[2]));
                        stream_labels.push(c);
                    }
                }
                streams.push(SensorStream {
                    subject: id.clone(),
                    limb,
                    side,
                    samples,
                    labels: stream_labels,
                });
            }
        }
    }
    Ok((streams, labels))
}

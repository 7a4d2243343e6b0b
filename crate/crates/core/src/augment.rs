//! Placement-variant copies of windows: contralateral wear (axis inversion)
//! and upside-down wear (180 degree rotation about the sensor x-axis).

use serde::{Deserialize, Serialize};

use crate::domain::{Limb, Provenance, TriaxialWindow};
use crate::error::{Error, Result};
use crate::ingest::WindowedDataset;

fn toggle_inverted(p: Provenance) -> Provenance {
    match p {
        Provenance::Original => Provenance::Inverted,
        Provenance::Inverted => Provenance::Original,
        Provenance::Rotated => Provenance::InvertedRotated,
        Provenance::InvertedRotated => Provenance::Rotated,
    }
}

fn toggle_rotated(p: Provenance) -> Provenance {
    match p {
        Provenance::Original => Provenance::Rotated,
        Provenance::Rotated => Provenance::Original,
        Provenance::Inverted => Provenance::InvertedRotated,
        Provenance::InvertedRotated => Provenance::Inverted,
    }
}

/// Mirror for wear on the opposite side: arm flips x, leg flips y.
pub fn invert_axis(w: &TriaxialWindow) -> TriaxialWindow {
    let mut out = w.clone();
    match w.meta.limb {
        Limb::Arm => out.samples.iter_mut().for_each(|s| s.ax = -s.ax),
        Limb::Leg => out.samples.iter_mut().for_each(|s| s.ay = -s.ay),
    }
    out.meta.provenance = toggle_inverted(w.meta.provenance);
    out
}

/// Upside-down wear: (x, y, z) -> (x, -y, -z).
pub fn rotate_180_x(w: &TriaxialWindow) -> TriaxialWindow {
    let mut out = w.clone();
    for s in &mut out.samples {
        s.ay = -s.ay;
        s.az = -s.az;
    }
    out.meta.provenance = toggle_rotated(w.meta.provenance);
    out
}

/// Produce the variant `target` of an original window.
pub fn variant(w: &TriaxialWindow, target: Provenance) -> TriaxialWindow {
    match target {
        Provenance::Original => w.clone(),
        Provenance::Inverted => invert_axis(w),
        Provenance::Rotated => rotate_180_x(w),
        Provenance::InvertedRotated => rotate_180_x(&invert_axis(w)),
    }
}

/// Set of variants to add next to the original windows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Provenance>", into = "Vec<Provenance>")]
pub struct AugmentPolicy {
    variants: Vec<Provenance>,
}

impl AugmentPolicy {
    /// Variants are deduplicated and kept in canonical order.
    pub fn new(variants: impl IntoIterator<Item = Provenance>) -> Result<Self> {
        let mut variants: Vec<Provenance> = variants.into_iter().collect();
        if variants.contains(&Provenance::Original) {
            return Err(Error::Config("'original' is not an augmentation variant".into()));
        }
        variants.sort();
        variants.dedup();
        Ok(Self { variants })
    }

    pub fn none() -> Self {
        Self { variants: Vec::new() }
    }

    pub fn all() -> Self {
        Self {
            variants: vec![Provenance::Inverted, Provenance::Rotated, Provenance::InvertedRotated],
        }
    }

    pub fn variants(&self) -> &[Provenance] {
        &self.variants
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    /// Windows produced per input window, original included.
    pub fn multiplier(&self) -> usize {
        1 + self.variants.len()
    }
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        Self {
            variants: vec![Provenance::Inverted, Provenance::Rotated],
        }
    }
}

impl TryFrom<Vec<Provenance>> for AugmentPolicy {
    type Error = Error;

    fn try_from(v: Vec<Provenance>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AugmentPolicy> for Vec<Provenance> {
    fn from(p: AugmentPolicy) -> Self {
        p.variants
    }
}

/// Originals first, then one block per enabled variant.
pub fn augment_dataset(d: &WindowedDataset, policy: &AugmentPolicy) -> WindowedDataset {
    let mut windows = Vec::with_capacity(d.len() * policy.multiplier());
    windows.extend(d.windows.iter().cloned());
    for &v in policy.variants() {
        windows.extend(d.windows.iter().map(|w| variant(w, v)));
    }
    WindowedDataset {
        windows,
        label_set: d.label_set.clone(),
    }
}

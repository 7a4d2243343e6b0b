//! Domain vocabulary shared by every pipeline stage.
//!
//! All types here are plain immutable data once built and are `Send + Sync`,
//! so windows and label sets can be shared freely between rayon workers.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ValidationError};

/// Default sampling rate in Hz.
pub const DEFAULT_RATE: f64 = 50.0;
/// Default window duration in seconds.
pub const DEFAULT_WINDOW_SECONDS: f64 = 1.0;

/// Name of the background class.
pub const NULL_LABEL: &str = "null";

/// The 18 exercise classes of the WEAR challenge, in the order used for
/// probability vectors after the leading Null class.
pub const WEAR_ACTIVITIES: [&str; 18] = [
    "jogging",
    "jogging (rotating arms)",
    "jogging (skipping)",
    "jogging (sidesteps)",
    "jogging (butt-kicks)",
    "stretching (triceps)",
    "stretching (lunging)",
    "stretching (shoulders)",
    "stretching (hamstrings)",
    "stretching (lumbar rotation)",
    "push-ups",
    "push-ups (complex)",
    "sit-ups",
    "sit-ups (complex)",
    "burpees",
    "lunges",
    "lunges (complex)",
    "bench-dips",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Limb {
    Arm,
    Leg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// How a window was produced. Only `Original` windows come straight from a sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Inverted,
    Rotated,
    InvertedRotated,
}

macro_rules! text_enum {
    ($ty:ty { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$variant => $text),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok(Self::$variant),)+
                    other => Err(Error::Config(format!(
                        "unknown {} '{}'", stringify!($ty).to_ascii_lowercase(), other
                    ))),
                }
            }
        }
    };
}

text_enum!(Limb { Arm => "arm", Leg => "leg" });
text_enum!(Side { Left => "left", Right => "right" });
text_enum!(Provenance {
    Original => "original",
    Inverted => "inverted",
    Rotated => "rotated",
    InvertedRotated => "inverted_rotated",
});

impl Limb {
    pub const ALL: [Limb; 2] = [Limb::Arm, Limb::Leg];
}

impl Side {
    pub const ALL: [Side; 2] = [Side::Left, Side::Right];
}

/// One accelerometer reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriaxialSample {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl TriaxialSample {
    pub fn new(t: f64, ax: f64, ay: f64, az: f64) -> Self {
        Self { t, ax, ay, az }
    }

    /// First axis holding a non-finite value.
    fn non_finite_axis(&self) -> Option<char> {
        [('x', self.ax), ('y', self.ay), ('z', self.az)]
            .into_iter()
            .find(|(_, v)| !v.is_finite())
            .map(|(axis, _)| axis)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowMeta {
    pub subject: String,
    pub limb: Limb,
    pub side: Side,
    /// Index into the run's [`LabelSet`].
    pub label: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriaxialWindow {
    pub meta: WindowMeta,
    pub samples: Vec<TriaxialSample>,
}

impl TriaxialWindow {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Start time of the window.
    pub fn start_time(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.t)
    }
}

/// Check the length, finiteness and strictly-increasing-time invariants.
/// Reports the first violation found.
pub fn validate_window(w: &TriaxialWindow, expected_len: usize) -> Result<(), ValidationError> {
    if w.samples.len() != expected_len {
        return Err(ValidationError::Length {
            expected: expected_len,
            found: w.samples.len(),
        });
    }
    for (index, s) in w.samples.iter().enumerate() {
        if let Some(axis) = s.non_finite_axis() {
            return Err(ValidationError::NonFinite { index, axis });
        }
        if !s.t.is_finite() {
            return Err(ValidationError::NonFinite { index, axis: 't' });
        }
    }
    for (i, pair) in w.samples.windows(2).enumerate() {
        if pair[1].t <= pair[0].t {
            return Err(ValidationError::NonMonotoneTime { index: i + 1 });
        }
    }
    Ok(())
}

/// Ordered set of class names. Order defines probability-vector layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSet {
    pub fn new<I, S>(names: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::Config("label set is empty".into()));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate label '{name}'")));
            }
        }
        Ok(Self { names, index })
    }

    /// Null plus the 18 WEAR exercises.
    pub fn wear() -> Self {
        Self::new(std::iter::once(NULL_LABEL).chain(WEAR_ACTIVITIES)).expect("static labels are unique")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

impl Default for LabelSet {
    fn default() -> Self {
        Self::wear()
    }
}

impl Serialize for LabelSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.names.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(deserializer)?;
        LabelSet::new(names).map_err(serde::de::Error::custom)
    }
}

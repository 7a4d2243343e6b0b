//! The ten derived channels: raw axes, squared magnitudes and pairwise angles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::TriaxialWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    AccX,
    AccY,
    AccZ,
    Smv2Xyz,
    Smv2Xy,
    Smv2Xz,
    Smv2Yz,
    AngleXy,
    AngleXz,
    AngleYz,
}

/// Channel family, which is how feature totals are reported (135/180/135).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelFamily {
    Raw,
    Smv,
    Angle,
}

impl Channel {
    pub const ALL: [Channel; 10] = [
        Channel::AccX,
        Channel::AccY,
        Channel::AccZ,
        Channel::Smv2Xyz,
        Channel::Smv2Xy,
        Channel::Smv2Xz,
        Channel::Smv2Yz,
        Channel::AngleXy,
        Channel::AngleXz,
        Channel::AngleYz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::AccX => "acc_x",
            Channel::AccY => "acc_y",
            Channel::AccZ => "acc_z",
            Channel::Smv2Xyz => "smv2_xyz",
            Channel::Smv2Xy => "smv2_xy",
            Channel::Smv2Xz => "smv2_xz",
            Channel::Smv2Yz => "smv2_yz",
            Channel::AngleXy => "angle_xy",
            Channel::AngleXz => "angle_xz",
            Channel::AngleYz => "angle_yz",
        }
    }

    pub fn family(self) -> ChannelFamily {
        match self {
            Channel::AccX | Channel::AccY | Channel::AccZ => ChannelFamily::Raw,
            Channel::Smv2Xyz | Channel::Smv2Xy | Channel::Smv2Xz | Channel::Smv2Yz => ChannelFamily::Smv,
            Channel::AngleXy | Channel::AngleXz | Channel::AngleYz => ChannelFamily::Angle,
        }
    }
}

/// One derived scalar series over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSeries {
    pub channel: Channel,
    pub values: Vec<f64>,
}

/// `atan2(u, v)` folded into (-pi, pi].
pub fn wrapped_angle(u: f64, v: f64) -> f64 {
    let a = u.atan2(v);
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

pub fn derive_channels(w: &TriaxialWindow) -> Vec<ChannelSeries> {
    let s = &w.samples;
    let series = |f: &dyn Fn(f64, f64, f64) -> f64| -> Vec<f64> { s.iter().map(|p| f(p.ax, p.ay, p.az)).collect() };
    Channel::ALL
        .iter()
        .map(|&channel| {
            let values = match channel {
                Channel::AccX => series(&|x, _, _| x),
                Channel::AccY => series(&|_, y, _| y),
                Channel::AccZ => series(&|_, _, z| z),
                Channel::Smv2Xyz => series(&|x, y, z| x * x + y * y + z * z),
                Channel::Smv2Xy => series(&|x, y, _| x * x + y * y),
                Channel::Smv2Xz => series(&|x, _, z| x * x + z * z),
                Channel::Smv2Yz => series(&|_, y, z| y * y + z * z),
                Channel::AngleXy => series(&|x, y, _| wrapped_angle(x, y)),
                Channel::AngleXz => series(&|x, _, z| wrapped_angle(x, z)),
                Channel::AngleYz => series(&|_, y, z| wrapped_angle(y, z)),
            };
            ChannelSeries { channel, values }
        })
        .collect()
}

//! KITTI object records and benchmark difficulty buckets.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::{Box2D, Dimensions, Pose};
use crate::metrics::Cuboid;

pub const DONT_CARE: &str = "DontCare";

/// `alpha` value KITTI uses for "not set".
pub const ALPHA_UNSET: f64 = -10.0;

/// One object line of a KITTI label or detection file.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiRecord {
    pub object_type: String,
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
    pub bbox: Box2D,
    pub h: f64,
    pub w: f64,
    pub l: f64,
    /// Bottom-face center in camera coordinates.
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub rotation_y: f64,
    pub score: Option<f64>,
}

impl KittiRecord {
    pub fn is_dont_care(&self) -> bool {
        self.object_type == DONT_CARE
    }

    pub fn dims(&self) -> Dimensions {
        Dimensions { l: self.l, h: self.h, w: self.w }
    }

    pub fn location(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn set_location(&mut self, t: [f64; 3]) {
        [self.x, self.y, self.z] = t;
    }

    pub fn pose(&self) -> Pose {
        Pose { theta: self.rotation_y, t: self.location() }
    }

    pub fn cuboid(&self) -> Cuboid {
        Cuboid { pose: self.pose(), dims: self.dims() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
    Ignored,
}

impl Difficulty {
    pub const EVALUATED: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Hard => "hard",
            Difficulty::Ignored => "ignored",
        }
    }
}

/// Per-bucket limits, indexed Easy/Moderate/Hard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifficultyThresholds {
    pub min_height: [f64; 3],
    pub max_occlusion: [i32; 3],
    pub max_truncation: [f64; 3],
}

impl DifficultyThresholds {
    /// KITTI object benchmark definition.
    pub const KITTI: DifficultyThresholds = DifficultyThresholds {
        min_height: [40.0, 25.0, 25.0],
        max_occlusion: [0, 1, 2],
        max_truncation: [0.15, 0.30, 0.50],
    };

    pub fn min_height_of(&self, d: Difficulty) -> f64 {
        match d {
            Difficulty::Easy => self.min_height[0],
            Difficulty::Moderate => self.min_height[1],
            Difficulty::Hard | Difficulty::Ignored => self.min_height[2],
        }
    }
}

impl Default for DifficultyThresholds {
    fn default() -> Self {
        Self::KITTI
    }
}

/// The easiest bucket whose three limits all hold.
pub fn difficulty_with(record: &KittiRecord, th: &DifficultyThresholds) -> Difficulty {
    let height = record.bbox.height();
    for (i, d) in Difficulty::EVALUATED.into_iter().enumerate() {
        if height >= th.min_height[i]
            && record.occluded <= th.max_occlusion[i]
            && record.truncated <= th.max_truncation[i]
        {
            return d;
        }
    }
    Difficulty::Ignored
}

pub fn difficulty_of(record: &KittiRecord) -> Difficulty {
    difficulty_with(record, &DifficultyThresholds::KITTI)
}

/// Drops `DontCare` entries and anything truncated beyond `max_truncation`.
pub fn filter_truncated(records: &[KittiRecord], max_truncation: f64) -> Vec<KittiRecord> {
    records
        .iter()
        .filter(|r| !r.is_dont_care() && r.truncated <= max_truncation)
        .cloned()
        .collect()
}

#[cfg(test)]
pub(crate) fn record(object_type: &str, bbox: Box2D, truncated: f64, occluded: i32) -> KittiRecord {
    KittiRecord {
        object_type: object_type.into(),
        truncated,
        occluded,
        alpha: 0.0,
        bbox,
        h: 1.5,
        w: 1.6,
        l: 3.9,
        x: 0.0,
        y: 1.6,
        z: 20.0,
        rotation_y: 0.0,
        score: None,
    }
}

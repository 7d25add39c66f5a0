//! Viewpoint classes and the viewpoint-to-configuration table.
//!
//! Instead of solving all 64 vertex assignments, an object's viewpoint
//! class (looking down or front, one or two side faces visible, quadrant of
//! the local orientation) selects a short list of assignments that occur
//! for that class. The list is derived empirically by sampling the forward
//! model.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::geometry::{
    argmax_vertices, exhaustive_search, Box2D, ConstraintConfig, Dimensions, GeometryError,
    Intrinsics, Pose, SolveResult,
};
use crate::orientation::local_orientation;
use crate::synth::{rng_from_seed, ObjectSampler, SynthError};

pub const DEFAULT_FACE_BAND: f64 = 0.08;

/// Samples below this count are rejected by [`derive_table`].
pub const MIN_DERIVATION_SAMPLES: usize = 10_000;

pub const N_CLASSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ViewpointError {
    #[error("derivation needs at least {MIN_DERIVATION_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("viewpoint class `{0}` received no samples")]
    InsufficientCoverage(ViewpointClass),
    #[error("face band {0} must lie in (0, π/4)")]
    InvalidFaceBand(f64),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("invalid table: {0}")]
    InvalidTable(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertical {
    /// The camera is above the object's top face.
    Down,
    /// Level with or below the top face.
    Front,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Faces {
    OneSide,
    TwoSides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ViewpointClass {
    pub vertical: Vertical,
    pub faces: Faces,
    quadrant: u8,
}

impl ViewpointClass {
    pub fn new(vertical: Vertical, faces: Faces, quadrant: u8) -> Option<Self> {
        (quadrant < 4).then_some(Self { vertical, faces, quadrant })
    }

    pub fn quadrant(&self) -> u8 {
        self.quadrant
    }

    /// Dense index in `0..16`: vertical, then faces, then quadrant.
    pub fn index(&self) -> usize {
        (self.vertical as usize) * 8 + (self.faces as usize) * 4 + self.quadrant as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        if i >= N_CLASSES {
            return None;
        }
        let vertical = if i / 8 == 0 { Vertical::Down } else { Vertical::Front };
        let faces = if (i / 4) % 2 == 0 { Faces::OneSide } else { Faces::TwoSides };
        Some(Self { vertical, faces, quadrant: (i % 4) as u8 })
    }

    pub fn all() -> impl Iterator<Item = ViewpointClass> {
        (0..N_CLASSES).filter_map(Self::from_index)
    }
}

impl fmt::Display for ViewpointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.vertical {
            Vertical::Down => "Down",
            Vertical::Front => "Front",
        };
        let s = match self.faces {
            Faces::OneSide => "OneSide",
            Faces::TwoSides => "TwoSides",
        };
        write!(f, "{v} {s} {}", self.quadrant)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected `<Down|Front> <OneSide|TwoSides> <0-3>`")]
pub struct ParseViewpointError;

impl FromStr for ViewpointClass {
    type Err = ParseViewpointError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut it = s.split_whitespace();
        let vertical = match it.next() {
            Some("Down") => Vertical::Down,
            Some("Front") => Vertical::Front,
            _ => return Err(ParseViewpointError),
        };
        let faces = match it.next() {
            Some("OneSide") => Faces::OneSide,
            Some("TwoSides") => Faces::TwoSides,
            _ => return Err(ParseViewpointError),
        };
        let quadrant = match it.next() {
            Some(q) if q.len() == 1 => q.parse::<u8>().map_err(|_| ParseViewpointError)?,
            _ => return Err(ParseViewpointError),
        };
        if it.next().is_some() {
            return Err(ParseViewpointError);
        }
        Self::new(vertical, faces, quadrant).ok_or(ParseViewpointError)
    }
}

/// Geometric stand-in for an appearance classifier.
///
/// `OneSide` when the local orientation lies in `[kπ/2 - band, kπ/2 + band)`
/// for some `k`; the quadrant is `floor(θ_l / (π/2))` with `θ_l` in
/// `[0, 2π)`. Slight up-views count as `Front`.
pub fn classify_viewpoint(pose: &Pose, dims: &Dimensions, face_band: f64) -> ViewpointClass {
    debug_assert!(face_band > 0.0 && face_band < core::f64::consts::FRAC_PI_4);
    let vertical = if pose.t[1] - dims.h > 0.0 { Vertical::Down } else { Vertical::Front };
    let theta_l = match local_orientation(pose) {
        Ok(l) => l.radians(),
        // Degenerate depth: fall back to the straight-ahead ray.
        Err(_) => crate::angle::wrap_two_pi(pose.theta),
    };
    let phase = libm::fmod(theta_l + face_band, FRAC_PI_2);
    let faces = if phase < 2.0 * face_band { Faces::OneSide } else { Faces::TwoSides };
    let quadrant = (libm::floor(theta_l / FRAC_PI_2) as i64).clamp(0, 3) as u8;
    ViewpointClass { vertical, faces, quadrant }
}

/// How a table was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub n_samples: usize,
    pub face_band: f64,
}

/// Candidate configurations per viewpoint class, most frequent first.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigTable {
    entries: Vec<Vec<ConstraintConfig>>,
    pub provenance: Provenance,
}

impl ConfigTable {
    /// `entries[i]` belongs to `ViewpointClass::from_index(i)`.
    pub fn new(entries: Vec<Vec<ConstraintConfig>>, provenance: Provenance) -> Result<Self, ViewpointError> {
        if entries.len() != N_CLASSES {
            return Err(ViewpointError::InvalidTable("need one entry per viewpoint class"));
        }
        for list in &entries {
            if list.is_empty() {
                return Err(ViewpointError::InvalidTable("empty candidate list"));
            }
            if list.iter().any(|c| c.catalog_index().is_none()) {
                return Err(ViewpointError::InvalidTable("configuration outside the 64-entry catalog"));
            }
            for (i, c) in list.iter().enumerate() {
                if list[..i].contains(c) {
                    return Err(ViewpointError::InvalidTable("duplicate configuration in a list"));
                }
            }
        }
        Ok(Self { entries, provenance })
    }

    pub fn entries(&self) -> &[Vec<ConstraintConfig>] {
        &self.entries
    }

    pub fn max_list_len(&self) -> usize {
        self.entries.iter().map(Vec::len).max().unwrap_or(0)
    }
}

pub fn candidates_for(table: &ConfigTable, vp: ViewpointClass) -> &[ConstraintConfig] {
    &table.entries[vp.index()]
}

/// Per-class sample counts and configuration frequencies from one
/// sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewpointStats {
    pub n_samples: usize,
    pub class_samples: [usize; N_CLASSES],
    /// Per class, `(config, count)` sorted by descending count, then by
    /// catalog order.
    pub config_counts: Vec<Vec<(ConstraintConfig, usize)>>,
}

pub fn sample_viewpoint_stats(
    sampler: &ObjectSampler,
    n_samples: usize,
    seed: u64,
    face_band: f64,
) -> Result<ViewpointStats, ViewpointError> {
    if !(face_band > 0.0 && face_band < core::f64::consts::FRAC_PI_4) {
        return Err(ViewpointError::InvalidFaceBand(face_band));
    }
    let mut rng = rng_from_seed(seed);
    let mut counts = [[0usize; 64]; N_CLASSES];
    let mut class_samples = [0usize; N_CLASSES];
    for _ in 0..n_samples {
        let (pose, dims, _) = sampler.sample(&mut rng)?;
        let config = argmax_vertices(&sampler.intrinsics, &pose, &dims)
            .expect("sampled objects are in front of the camera");
        let vp = classify_viewpoint(&pose, &dims, face_band);
        class_samples[vp.index()] += 1;
        // Exact ties in projection can yield assignments outside the catalog;
        // they are equivalent to a catalog entry and are not recorded.
        if let Some(k) = config.catalog_index() {
            counts[vp.index()][k] += 1;
        }
    }
    let config_counts = counts
        .iter()
        .map(|row| {
            let mut list: Vec<(ConstraintConfig, usize)> = row
                .iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(|(k, &n)| (crate::geometry::ALL_CONFIGS[k], n))
                .collect();
            // Stable sort keeps catalog order among equal counts.
            list.sort_by(|a, b| b.1.cmp(&a.1));
            list
        })
        .collect();
    Ok(ViewpointStats { n_samples, class_samples, config_counts })
}

/// Samples the forward model and records, for each viewpoint class, every
/// configuration observed, most frequent first.
pub fn derive_table(
    sampler: &ObjectSampler,
    n_samples: usize,
    seed: u64,
    face_band: f64,
) -> Result<ConfigTable, ViewpointError> {
    if n_samples < MIN_DERIVATION_SAMPLES {
        return Err(ViewpointError::TooFewSamples(n_samples));
    }
    let stats = sample_viewpoint_stats(sampler, n_samples, seed, face_band)?;
    table_from_stats(&stats, Provenance { seed, n_samples, face_band })
}

pub fn table_from_stats(stats: &ViewpointStats, provenance: Provenance) -> Result<ConfigTable, ViewpointError> {
    let mut entries = Vec::with_capacity(N_CLASSES);
    for (i, list) in stats.config_counts.iter().enumerate() {
        if list.is_empty() {
            let vp = ViewpointClass::from_index(i).expect("index < 16");
            return Err(ViewpointError::InsufficientCoverage(vp));
        }
        entries.push(list.iter().map(|(c, _)| *c).collect());
    }
    ConfigTable::new(entries, provenance)
}

/// [`exhaustive_search`] restricted to the class's candidates.
pub fn reduced_search(
    intr: &Intrinsics,
    bbox: &Box2D,
    dims: &Dimensions,
    theta: f64,
    table: &ConfigTable,
    vp: ViewpointClass,
) -> Result<SolveResult, GeometryError> {
    exhaustive_search(intr, bbox, dims, theta, candidates_for(table, vp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_4, PI};

    fn car() -> Dimensions {
        Dimensions::new(3.9, 1.5, 1.6).unwrap()
    }

    #[test]
    fn sixteen_distinct_classes() {
        let all: Vec<_> = ViewpointClass::all().collect();
        assert_eq!(all.len(), 16);
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(c.to_string().parse::<ViewpointClass>().unwrap(), *c);
        }
        assert!("Down OneSide 4".parse::<ViewpointClass>().is_err());
        assert!("Up OneSide 0".parse::<ViewpointClass>().is_err());
    }

    #[test]
    fn head_on_from_above() {
        let pose = Pose::new(0.0, [0.0, 1.65, 20.0]);
        let vp = classify_viewpoint(&pose, &car(), DEFAULT_FACE_BAND);
        assert_eq!(vp, ViewpointClass::new(Vertical::Down, Faces::OneSide, 0).unwrap());
    }

    #[test]
    fn two_faces_from_front() {
        let pose = Pose::new(FRAC_PI_4, [0.0, 1.2, 20.0]);
        let vp = classify_viewpoint(&pose, &car(), DEFAULT_FACE_BAND);
        assert_eq!(vp, ViewpointClass::new(Vertical::Front, Faces::TwoSides, 0).unwrap());
    }

    #[test]
    fn band_edges_are_half_open() {
        let band = 0.25;
        let at = |theta_l: f64| {
            classify_viewpoint(&Pose::new(theta_l, [0.0, 1.65, 20.0]), &car(), band).faces
        };
        // Inside [π/2 - band, π/2 + band) with float slack around the edges.
        assert_eq!(at(PI / 2.0 - band + 1e-9), Faces::OneSide);
        assert_eq!(at(PI / 2.0 + band - 1e-9), Faces::OneSide);
        assert_eq!(at(PI / 2.0 + band + 1e-9), Faces::TwoSides);
        assert_eq!(at(PI / 2.0 - band - 1e-9), Faces::TwoSides);
        // Just below 2π wraps into the band around 0 but stays in quadrant 3.
        let vp = classify_viewpoint(&Pose::new(-0.01, [0.0, 1.65, 20.0]), &car(), band);
        assert_eq!((vp.faces, vp.quadrant()), (Faces::OneSide, 3));
    }

    #[test]
    fn table_validation() {
        let cfg = crate::geometry::ALL_CONFIGS[0];
        let prov = Provenance { seed: 0, n_samples: 0, face_band: 0.08 };
        assert!(ConfigTable::new(alloc::vec![alloc::vec![cfg]; 16], prov).is_ok());
        assert!(ConfigTable::new(alloc::vec![alloc::vec![cfg]; 15], prov).is_err());
        assert!(ConfigTable::new(alloc::vec![alloc::vec![cfg, cfg]; 16], prov).is_err());
        let mut e = alloc::vec![alloc::vec![cfg]; 16];
        e[3].clear();
        assert!(ConfigTable::new(e, prov).is_err());
    }

    #[test]
    fn derivation_preconditions() {
        let s = ObjectSampler::default();
        assert_eq!(derive_table(&s, 9_999, 1, 0.08), Err(ViewpointError::TooFewSamples(9_999)));
        assert!(matches!(derive_table(&s, 10_000, 1, 1.0), Err(ViewpointError::InvalidFaceBand(_))));
        let mut narrow = s;
        narrow.ranges.ty = crate::synth::Interval::new(2.4, 2.5);
        assert!(matches!(
            derive_table(&narrow, 10_000, 1, 0.08),
            Err(ViewpointError::InsufficientCoverage(_))
        ));
    }
}

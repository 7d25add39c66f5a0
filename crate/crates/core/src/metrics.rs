//! KITTI-style evaluation: 2D/BEV/3D IoU, greedy score-ordered matching,
//! interpolated AP, Average Orientation Similarity, and Orientation Score.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{rotate_yaw, Box2D, Dimensions, Pose};
use crate::record::{difficulty_with, Difficulty, DifficultyThresholds, KittiRecord};

/// Cross-product slack when testing which side of a clip edge a point is on.
pub const CLIP_EPSILON: f64 = 1e-12;

pub fn iou_2d(a: &Box2D, b: &Box2D) -> f64 {
    let iw = a.u_max.min(b.u_max) - a.u_min.max(b.u_min);
    let ih = a.v_max.min(b.v_max) - a.v_min.max(b.v_min);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    inter / (a.area() + b.area() - inter)
}

/// Intersection area over the area of `a` alone.
pub fn intersection_over_first(a: &Box2D, b: &Box2D) -> f64 {
    let iw = a.u_max.min(b.u_max) - a.u_min.max(b.u_min);
    let ih = a.v_max.min(b.v_max) - a.v_min.max(b.v_min);
    if iw <= 0.0 || ih <= 0.0 || a.area() <= 0.0 {
        return 0.0;
    }
    iw * ih / a.area()
}

/// A yaw-rotated 3D box anchored at its bottom-face center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    pub pose: Pose,
    pub dims: Dimensions,
}

impl Cuboid {
    /// Ground-plane corners as `(x, z)`, counter-clockwise in that plane.
    pub fn footprint(&self) -> [[f64; 2]; 4] {
        let (hl, hw) = (self.dims.l / 2.0, self.dims.w / 2.0);
        let local = [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]];
        let mut out = local.map(|[x, z]| {
            let r = rotate_yaw(self.pose.theta, [x, 0.0, z]);
            [r[0] + self.pose.t[0], r[2] + self.pose.t[2]]
        });
        if signed_area(&out) < 0.0 {
            out.reverse();
        }
        out
    }

    /// `[y - h, y]` with y pointing down.
    pub fn vertical_extent(&self) -> (f64, f64) {
        (self.pose.t[1] - self.dims.h, self.pose.t[1])
    }

    /// Whether a camera-frame point lies inside the box.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let d = [p[0] - self.pose.t[0], p[1] - self.pose.t[1], p[2] - self.pose.t[2]];
        let local = rotate_yaw(-self.pose.theta, d);
        local[0].abs() <= self.dims.l / 2.0
            && local[2].abs() <= self.dims.w / 2.0
            && local[1] <= 0.0
            && local[1] >= -self.dims.h
    }
}

fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        / 2.0
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn line_intersection(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d1 = [q[0] - p[0], q[1] - p[1]];
    let d2 = [b[0] - a[0], b[1] - a[1]];
    let den = d1[0] * d2[1] - d1[1] * d2[0];
    if den.abs() < CLIP_EPSILON {
        return q;
    }
    let s = ((a[0] - p[0]) * d2[1] - (a[1] - p[1]) * d2[0]) / den;
    [p[0] + s * d1[0], p[1] + s * d1[1]]
}

/// Sutherland-Hodgman clip of a convex polygon by a convex CCW polygon.
pub fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = core::mem::take(&mut out);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let cur_in = cross(a, b, cur) >= -CLIP_EPSILON;
            let prev_in = cross(a, b, prev) >= -CLIP_EPSILON;
            if cur_in {
                if !prev_in {
                    out.push(line_intersection(prev, cur, a, b));
                }
                out.push(cur);
            } else if prev_in {
                out.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    out
}

pub fn bev_intersection_area(a: &Cuboid, b: &Cuboid) -> f64 {
    let poly = clip_convex(&a.footprint(), &b.footprint());
    if poly.len() < 3 {
        return 0.0;
    }
    signed_area(&poly).max(0.0)
}

pub fn iou_bev(a: &Cuboid, b: &Cuboid) -> f64 {
    let inter = bev_intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.dims.l * a.dims.w + b.dims.l * b.dims.w - inter;
    inter / union
}

pub fn iou_3d(a: &Cuboid, b: &Cuboid) -> f64 {
    let (a_top, a_bottom) = a.vertical_extent();
    let (b_top, b_bottom) = b.vertical_extent();
    let overlap = a_bottom.min(b_bottom) - a_top.max(b_top);
    if overlap <= 0.0 {
        return 0.0;
    }
    let inter = bev_intersection_area(a, b) * overlap;
    if inter <= 0.0 {
        return 0.0;
    }
    inter / (a.dims.volume() + b.dims.volume() - inter)
}

/// `(1 + cos Δθ) / 2`.
pub fn orientation_similarity(delta: f64) -> f64 {
    (1.0 + libm::cos(delta)) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    TruePositive(usize),
    FalsePositive,
    /// Matched an ignored ground truth; neither TP nor FP.
    Ignored,
}

/// Greedy matching in descending score order (ties keep input order).
///
/// Each detection takes the unmatched ground truth with the highest IoU at
/// or above `threshold`, lower index on ties. Returns `(det_index,
/// assignment)` in processing order.
pub fn match_detections<G, D>(
    gt: &[G],
    gt_ignored: &[bool],
    det: &[D],
    det_scores: &[f64],
    iou: impl Fn(&G, &D) -> f64,
    threshold: f64,
) -> Vec<(usize, Assignment)> {
    debug_assert_eq!(gt.len(), gt_ignored.len());
    debug_assert_eq!(det.len(), det_scores.len());
    let mut order: Vec<usize> = (0..det.len()).collect();
    order.sort_by(|&a, &b| det_scores[b].total_cmp(&det_scores[a]));
    let mut taken = vec![false; gt.len()];
    order
        .into_iter()
        .map(|d| {
            let mut best: Option<(usize, f64)> = None;
            for (g, item) in gt.iter().enumerate() {
                if taken[g] {
                    continue;
                }
                let o = iou(item, &det[d]);
                if o >= threshold && best.map_or(true, |(_, bo)| o > bo) {
                    best = Some((g, o));
                }
            }
            let a = match best {
                Some((g, _)) => {
                    taken[g] = true;
                    if gt_ignored[g] {
                        Assignment::Ignored
                    } else {
                        Assignment::TruePositive(g)
                    }
                }
                None => Assignment::FalsePositive,
            };
            (d, a)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PRPoint {
    pub recall: f64,
    pub precision: f64,
    /// Sum of TP orientation similarities over all detections so far.
    pub orientation_similarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PRField {
    Precision,
    OrientationSimilarity,
}

impl PRPoint {
    fn get(&self, f: PRField) -> f64 {
        match f {
            PRField::Precision => self.precision,
            PRField::OrientationSimilarity => self.orientation_similarity,
        }
    }
}

/// A scored detection after matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredOutcome {
    pub score: f64,
    pub true_positive: bool,
    /// Orientation similarity for TPs; ignored for FPs.
    pub similarity: f64,
}

/// One PR point per detection in descending score order.
pub fn pr_curve(outcomes: &[ScoredOutcome], n_gt: usize) -> Vec<PRPoint> {
    if n_gt == 0 {
        return Vec::new();
    }
    let mut sorted = outcomes.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let (mut tp, mut sim) = (0usize, 0.0);
    sorted
        .iter()
        .enumerate()
        .map(|(i, o)| {
            if o.true_positive {
                tp += 1;
                sim += o.similarity;
            }
            let n = (i + 1) as f64;
            PRPoint {
                recall: tp as f64 / n_gt as f64,
                precision: tp as f64 / n,
                orientation_similarity: sim / n,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Recall thresholds `{0, 0.1, ..., 1}`.
    #[default]
    Eleven,
    /// Recall thresholds `{1/40, 2/40, ..., 1}`.
    Forty,
}

fn max_field_from(pr: &[PRPoint], field: PRField, recall: f64) -> f64 {
    pr.iter()
        .filter(|p| p.recall >= recall)
        .map(|p| p.get(field))
        .fold(0.0, f64::max)
}

pub fn ap_11point(pr: &[PRPoint], field: PRField) -> f64 {
    (0..=10).map(|i| max_field_from(pr, field, i as f64 / 10.0)).sum::<f64>() / 11.0
}

pub fn ap_40point(pr: &[PRPoint], field: PRField) -> f64 {
    (1..=40).map(|i| max_field_from(pr, field, i as f64 / 40.0)).sum::<f64>() / 40.0
}

pub fn average_precision(pr: &[PRPoint], field: PRField, mode: Interpolation) -> f64 {
    match mode {
        Interpolation::Eleven => ap_11point(pr, field),
        Interpolation::Forty => ap_40point(pr, field),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub class: String,
    /// Ground truths of these classes are ignored rather than missed.
    pub neighbor_classes: Vec<String>,
    pub iou_2d: f64,
    pub iou_3d: [f64; 2],
    /// A detection covering a DontCare region by at least this fraction of
    /// its own area is ignored instead of counted as FP.
    pub dont_care_overlap: f64,
    pub thresholds: DifficultyThresholds,
    pub interpolation: Interpolation,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            class: "Car".into(),
            neighbor_classes: vec!["Van".into()],
            iou_2d: 0.7,
            iou_3d: [0.5, 0.7],
            dont_care_overlap: 0.5,
            thresholds: DifficultyThresholds::KITTI,
            interpolation: Interpolation::Eleven,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DifficultyScores {
    pub n_gt: usize,
    pub ap_2d: f64,
    pub aos: f64,
    pub os: f64,
    pub ap_3d_50: f64,
    pub ap_3d_70: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalReport {
    pub easy: DifficultyScores,
    pub moderate: DifficultyScores,
    pub hard: DifficultyScores,
}

impl EvalReport {
    pub fn get(&self, d: Difficulty) -> Option<&DifficultyScores> {
        match d {
            Difficulty::Easy => Some(&self.easy),
            Difficulty::Moderate => Some(&self.moderate),
            Difficulty::Hard => Some(&self.hard),
            Difficulty::Ignored => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Difficulty, &DifficultyScores)> {
        [(Difficulty::Easy, &self.easy), (Difficulty::Moderate, &self.moderate), (Difficulty::Hard, &self.hard)]
            .into_iter()
    }
}

#[derive(Clone, Copy)]
enum Overlap {
    Box2D(f64),
    Box3D(f64),
}

/// Matching outcomes and valid ground-truth count for one frame.
fn frame_outcomes(
    gt: &[KittiRecord],
    det: &[KittiRecord],
    bucket: Difficulty,
    overlap: Overlap,
    cfg: &EvalConfig,
) -> (Vec<ScoredOutcome>, usize) {
    let mut gt_sel: Vec<&KittiRecord> = Vec::new();
    let mut gt_ignored: Vec<bool> = Vec::new();
    let mut dont_care: Vec<Box2D> = Vec::new();
    for r in gt {
        if r.is_dont_care() {
            dont_care.push(r.bbox);
        } else if r.object_type == cfg.class {
            gt_sel.push(r);
            gt_ignored.push(difficulty_with(r, &cfg.thresholds) > bucket);
        } else if cfg.neighbor_classes.iter().any(|c| *c == r.object_type) {
            gt_sel.push(r);
            gt_ignored.push(true);
        }
    }
    let min_height = cfg.thresholds.min_height_of(bucket);
    let det_sel: Vec<&KittiRecord> = det
        .iter()
        .filter(|r| r.object_type == cfg.class && r.bbox.height() >= min_height)
        .collect();
    let scores: Vec<f64> = det_sel.iter().map(|r| r.score.unwrap_or(0.0)).collect();
    let matches = match overlap {
        Overlap::Box2D(th) => {
            match_detections(&gt_sel, &gt_ignored, &det_sel, &scores, |g, d| iou_2d(&g.bbox, &d.bbox), th)
        }
        Overlap::Box3D(th) => {
            match_detections(&gt_sel, &gt_ignored, &det_sel, &scores, |g, d| iou_3d(&g.cuboid(), &d.cuboid()), th)
        }
    };
    let outcomes = matches
        .into_iter()
        .filter_map(|(d, a)| match a {
            Assignment::TruePositive(g) => Some(ScoredOutcome {
                score: scores[d],
                true_positive: true,
                similarity: orientation_similarity(det_sel[d].rotation_y - gt_sel[g].rotation_y),
            }),
            Assignment::FalsePositive => {
                let in_dont_care = dont_care
                    .iter()
                    .any(|b| intersection_over_first(&det_sel[d].bbox, b) >= cfg.dont_care_overlap);
                (!in_dont_care).then_some(ScoredOutcome { score: scores[d], true_positive: false, similarity: 0.0 })
            }
            Assignment::Ignored => None,
        })
        .collect();
    (outcomes, gt_ignored.iter().filter(|i| !**i).count())
}

fn bucket_curve(
    gt_frames: &[Vec<KittiRecord>],
    det_frames: &[Vec<KittiRecord>],
    bucket: Difficulty,
    overlap: Overlap,
    cfg: &EvalConfig,
) -> (Vec<PRPoint>, usize) {
    let mut all = Vec::new();
    let mut n_gt = 0;
    for (i, gt) in gt_frames.iter().enumerate() {
        let det = det_frames.get(i).map(Vec::as_slice).unwrap_or(&[]);
        let (o, n) = frame_outcomes(gt, det, bucket, overlap, cfg);
        all.extend(o);
        n_gt += n;
    }
    (pr_curve(&all, n_gt), n_gt)
}

/// Frames are paired by index; a missing detection frame counts as empty.
pub fn evaluate(gt_frames: &[Vec<KittiRecord>], det_frames: &[Vec<KittiRecord>], cfg: &EvalConfig) -> EvalReport {
    let mode = cfg.interpolation;
    let score = |bucket| {
        let (pr2, n_gt) = bucket_curve(gt_frames, det_frames, bucket, Overlap::Box2D(cfg.iou_2d), cfg);
        let ap_2d = average_precision(&pr2, PRField::Precision, mode);
        let aos = average_precision(&pr2, PRField::OrientationSimilarity, mode);
        let ap3 = |th| {
            let (pr, _) = bucket_curve(gt_frames, det_frames, bucket, Overlap::Box3D(th), cfg);
            average_precision(&pr, PRField::Precision, mode)
        };
        DifficultyScores {
            n_gt,
            ap_2d,
            aos,
            os: if ap_2d > 0.0 { aos / ap_2d } else { 0.0 },
            ap_3d_50: ap3(cfg.iou_3d[0]),
            ap_3d_70: ap3(cfg.iou_3d[1]),
        }
    };
    EvalReport {
        easy: score(Difficulty::Easy),
        moderate: score(Difficulty::Moderate),
        hard: score(Difficulty::Hard),
    }
}

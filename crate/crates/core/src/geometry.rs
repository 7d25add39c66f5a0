//! Perspective projection and the tight-fit constraint system.
//!
//! An object is a yaw-rotated cuboid anchored at the center of its bottom
//! face. Its projection must touch all four edges of the 2D detection box,
//! and each touching vertex contributes one linear equation in the unknown
//! translation. Four equations, three unknowns: the translation is the
//! least-squares solution for the right vertex assignment, and the baseline
//! method tries every physically possible assignment.
//!
//! Frames follow the KITTI camera convention: x right, y down, z forward.
//! Yaw `theta` rotates about the y axis.

use core::fmt;
use core::str::FromStr;

use nalgebra::{Matrix4x3, Vector4};
use thiserror::Error;

use crate::angle::wrap_pi;

/// Minimum homogeneous depth accepted by [`project`].
pub const MIN_DEPTH: f64 = 1e-9;

/// Smallest/largest singular value ratio below which a system is rejected.
pub const DEGENERACY_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("point projects with non-positive depth {0}")]
    NonPositiveDepth(f64),
    #[error("constraint system is rank deficient (singular value ratio {0:e})")]
    DegenerateSystem(f64),
    #[error("no candidate configuration yields a translation in front of the camera")]
    NoFeasibleConfig,
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    #[error("dimensions must be strictly positive")]
    InvalidDimensions,
    #[error("2D box must satisfy u_min < u_max and v_min < v_max")]
    InvalidBox,
    #[error("vertex id {0} out of range 0..8")]
    InvalidVertex(u8),
}

/// A 3x4 camera projection matrix (the role of KITTI's `P2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    p: [[f64; 4]; 3],
}

impl Intrinsics {
    pub fn new(p: [[f64; 4]; 3]) -> Result<Self, GeometryError> {
        if p.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("non-finite entry"));
        }
        if p[0][0] <= 0.0 || p[1][1] <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics("focal entries must be positive"));
        }
        if p[2][2] == 0.0 {
            return Err(GeometryError::InvalidIntrinsics("p[2][2] must be nonzero"));
        }
        Ok(Self { p })
    }

    /// Pure pinhole `K` padded with a zero fourth column.
    pub fn pinhole(fx: f64, fy: f64, cu: f64, cv: f64) -> Result<Self, GeometryError> {
        Self::new([[fx, 0.0, cu, 0.0], [0.0, fy, cv, 0.0], [0.0, 0.0, 1.0, 0.0]])
    }

    pub fn matrix(&self) -> &[[f64; 4]; 3] {
        &self.p
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (self.p[0][2], self.p[1][2])
    }

    /// The same camera with the image plane shifted by `(du, dv)` pixels,
    /// i.e. `[[1,0,du],[0,1,dv],[0,0,1]] * P`.
    pub fn translated(&self, du: f64, dv: f64) -> Self {
        let mut p = self.p;
        for j in 0..4 {
            p[0][j] += du * self.p[2][j];
            p[1][j] += dv * self.p[2][j];
        }
        Self { p }
    }

    /// Projects a camera-frame point; returns `(u, v)` and the homogeneous depth.
    pub fn project_point(&self, x: [f64; 3]) -> Result<[f64; 2], GeometryError> {
        let h = self.homogeneous(x);
        if h[2] <= MIN_DEPTH {
            return Err(GeometryError::NonPositiveDepth(h[2]));
        }
        Ok([h[0] / h[2], h[1] / h[2]])
    }

    fn homogeneous(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, row) in out.iter_mut().zip(&self.p) {
            *o = row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + row[3];
        }
        out
    }
}

/// Axis-aligned image box in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl Box2D {
    pub fn new(u_min: f64, v_min: f64, u_max: f64, v_max: f64) -> Result<Self, GeometryError> {
        let b = Self { u_min, v_min, u_max, v_max };
        if b.is_valid() {
            Ok(b)
        } else {
            Err(GeometryError::InvalidBox)
        }
    }

    pub fn is_valid(&self) -> bool {
        self.u_min < self.u_max && self.v_min < self.v_max
    }

    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn height(&self) -> f64 {
        self.v_max - self.v_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn translated(&self, du: f64, dv: f64) -> Self {
        Self {
            u_min: self.u_min + du,
            v_min: self.v_min + dv,
            u_max: self.u_max + du,
            v_max: self.v_max + dv,
        }
    }
}

/// Object extent in meters: length along the object's x axis, height, and
/// width along its z axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensions {
    pub l: f64,
    pub h: f64,
    pub w: f64,
}

impl Dimensions {
    pub fn new(l: f64, h: f64, w: f64) -> Result<Self, GeometryError> {
        let d = Self { l, h, w };
        if d.is_valid() {
            Ok(d)
        } else {
            Err(GeometryError::InvalidDimensions)
        }
    }

    pub fn is_valid(&self) -> bool {
        self.l > 0.0 && self.h > 0.0 && self.w > 0.0 && self.volume().is_finite()
    }

    pub fn volume(&self) -> f64 {
        self.l * self.h * self.w
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { l: self.l * s, h: self.h * s, w: self.w * s }
    }
}

/// Global yaw plus the camera-to-bottom-face-center translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub theta: f64,
    pub t: [f64; 3],
}

impl Pose {
    pub fn new(theta: f64, t: [f64; 3]) -> Self {
        Self { theta: wrap_pi(theta), t }
    }

    /// Maps an object-frame point into the camera frame.
    pub fn transform(&self, x: [f64; 3]) -> [f64; 3] {
        let r = rotate_yaw(self.theta, x);
        [r[0] + self.t[0], r[1] + self.t[1], r[2] + self.t[2]]
    }
}

pub(crate) fn rotate_yaw(theta: f64, x: [f64; 3]) -> [f64; 3] {
    let (s, c) = libm::sincos(theta);
    [c * x[0] + s * x[2], x[1], -s * x[0] + c * x[2]]
}

/// One of the eight cuboid corners.
///
/// Bit 2 selects `x = -l/2` (else `+l/2`), bit 1 selects the top face
/// `y = -h` (else the bottom face `y = 0`), bit 0 selects `z = -w/2`
/// (else `+w/2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(u8);

impl VertexId {
    const X_NEG: u8 = 0b100;
    const TOP: u8 = 0b010;
    const Z_NEG: u8 = 0b001;
    const FOOTPRINT: u8 = Self::X_NEG | Self::Z_NEG;

    pub fn new(id: u8) -> Result<Self, GeometryError> {
        if id < 8 {
            Ok(Self(id))
        } else {
            Err(GeometryError::InvalidVertex(id))
        }
    }

    pub const fn from_signs(x_negative: bool, top: bool, z_negative: bool) -> Self {
        Self(((x_negative as u8) << 2) | ((top as u8) << 1) | z_negative as u8)
    }

    pub fn all() -> impl Iterator<Item = VertexId> {
        (0..8).map(VertexId)
    }

    pub const fn index(self) -> u8 {
        self.0
    }

    pub const fn x_negative(self) -> bool {
        self.0 & Self::X_NEG != 0
    }

    pub const fn is_top(self) -> bool {
        self.0 & Self::TOP != 0
    }

    pub const fn z_negative(self) -> bool {
        self.0 & Self::Z_NEG != 0
    }

    /// The footprint corner (same x/z signs) on the bottom face.
    pub const fn footprint(self) -> VertexId {
        VertexId(self.0 & Self::FOOTPRINT)
    }

    /// The corner diagonally opposite in the footprint, same level.
    pub const fn diagonal(self) -> VertexId {
        VertexId(self.0 ^ Self::FOOTPRINT)
    }

    /// This corner mirrored onto the other face (top <-> bottom).
    pub const fn other_level(self) -> VertexId {
        VertexId(self.0 ^ Self::TOP)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Object-frame offset of `v` from the bottom-face center.
pub fn vertex_offset(dims: &Dimensions, v: VertexId) -> [f64; 3] {
    let x = if v.x_negative() { -dims.l / 2.0 } else { dims.l / 2.0 };
    let y = if v.is_top() { -dims.h } else { 0.0 };
    let z = if v.z_negative() { -dims.w / 2.0 } else { dims.w / 2.0 };
    [x, y, z]
}

/// The vertices touching the left, right, top, and bottom box edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintConfig {
    pub u_min: VertexId,
    pub u_max: VertexId,
    pub v_min: VertexId,
    pub v_max: VertexId,
}

impl ConstraintConfig {
    pub fn vertices(&self) -> [VertexId; 4] {
        [self.u_min, self.u_max, self.v_min, self.v_max]
    }

    /// Position in [`all_configs`], if the configuration is enumerated.
    pub fn catalog_index(&self) -> Option<usize> {
        ALL_CONFIGS.binary_search(self).ok()
    }
}

impl fmt::Display for ConstraintConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}-{}", self.u_min, self.u_max, self.v_min, self.v_max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected four vertex ids `a-b-c-d` in 0..8")]
pub struct ParseConfigError;

impl FromStr for ConstraintConfig {
    type Err = ParseConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut ids = [VertexId(0); 4];
        let mut parts = s.split('-');
        for slot in &mut ids {
            let part = parts.next().ok_or(ParseConfigError)?;
            // Reject signs and whitespace that u8::from_str would otherwise accept.
            if part.len() != 1 || !part.as_bytes()[0].is_ascii_digit() {
                return Err(ParseConfigError);
            }
            *slot = VertexId::new(part.as_bytes()[0] - b'0').map_err(|_| ParseConfigError)?;
        }
        if parts.next().is_some() {
            return Err(ParseConfigError);
        }
        Ok(Self { u_min: ids[0], u_max: ids[1], v_min: ids[2], v_max: ids[3] })
    }
}

/// The footprint corner that follows `id` when walking the footprint
/// left-to-right across a single visible face.
const fn next_across_face(id: u8) -> u8 {
    match id & VertexId::FOOTPRINT {
        0b000 => 0b100,
        0b100 => 0b101,
        0b101 => 0b001,
        _ => 0b000,
    }
}

/// Occurrence rule under zero pitch/roll.
///
/// Left/right: `u` does not depend on the vertex height, so both edges are
/// taken by bottom-face corners (lowest id on the top/bottom tie). They are
/// either diagonal (two faces visible) or the two ends of the single visible
/// face, in a fixed left-to-right order.
///
/// Top/bottom: the extreme `v` on each face is the nearest or farthest
/// corner in depth, and those are always the same footprint corner or
/// diagonal to each other.
const fn is_physical(u_min: u8, u_max: u8, v_min: u8, v_max: u8) -> bool {
    let top = VertexId::TOP;
    let fp = VertexId::FOOTPRINT;
    let horizontal = u_min & top == 0
        && u_max & top == 0
        && (u_max == u_min ^ fp || u_max == next_across_face(u_min));
    let vertical = v_min & top != 0
        && v_max & top == 0
        && ((v_min & fp) == v_max || (v_min & fp) == v_max ^ fp);
    horizontal && vertical
}

const fn build_all_configs() -> [ConstraintConfig; 64] {
    let zero = VertexId(0);
    let mut out = [ConstraintConfig { u_min: zero, u_max: zero, v_min: zero, v_max: zero }; 64];
    let mut n = 0;
    let mut a = 0;
    while a < 8 {
        let mut b = 0;
        while b < 8 {
            let mut c = 0;
            while c < 8 {
                let mut d = 0;
                while d < 8 {
                    if is_physical(a, b, c, d) {
                        out[n] = ConstraintConfig {
                            u_min: VertexId(a),
                            u_max: VertexId(b),
                            v_min: VertexId(c),
                            v_max: VertexId(d),
                        };
                        n += 1;
                    }
                    d += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    assert!(n == 64);
    out
}

/// Every configuration that can occur under zero pitch and roll, sorted
/// lexicographically by `(u_min, u_max, v_min, v_max)`.
pub static ALL_CONFIGS: [ConstraintConfig; 64] = build_all_configs();

pub fn all_configs() -> &'static [ConstraintConfig] {
    &ALL_CONFIGS
}

/// Image coordinates of one cuboid vertex.
pub fn project(
    intr: &Intrinsics,
    pose: &Pose,
    dims: &Dimensions,
    v: VertexId,
) -> Result<[f64; 2], GeometryError> {
    intr.project_point(pose.transform(vertex_offset(dims, v)))
}

fn project_all(
    intr: &Intrinsics,
    pose: &Pose,
    dims: &Dimensions,
) -> Result<[[f64; 2]; 8], GeometryError> {
    let mut out = [[0.0; 2]; 8];
    for (slot, v) in out.iter_mut().zip(VertexId::all()) {
        *slot = project(intr, pose, dims, v)?;
    }
    Ok(out)
}

/// The 2D box that tightly encloses the projected cuboid.
pub fn tight_box(intr: &Intrinsics, pose: &Pose, dims: &Dimensions) -> Result<Box2D, GeometryError> {
    let pts = project_all(intr, pose, dims)?;
    let mut b = Box2D {
        u_min: f64::INFINITY,
        v_min: f64::INFINITY,
        u_max: f64::NEG_INFINITY,
        v_max: f64::NEG_INFINITY,
    };
    for [u, v] in pts {
        b.u_min = b.u_min.min(u);
        b.u_max = b.u_max.max(u);
        b.v_min = b.v_min.min(v);
        b.v_max = b.v_max.max(v);
    }
    Ok(b)
}

/// The vertices attaining each extremum of [`tight_box`]; ties go to the
/// lowest vertex id.
pub fn argmax_vertices(
    intr: &Intrinsics,
    pose: &Pose,
    dims: &Dimensions,
) -> Result<ConstraintConfig, GeometryError> {
    let pts = project_all(intr, pose, dims)?;
    let (mut umin, mut umax, mut vmin, mut vmax) = (0usize, 0usize, 0usize, 0usize);
    for (i, p) in pts.iter().enumerate().skip(1) {
        if p[0] < pts[umin][0] {
            umin = i;
        }
        if p[0] > pts[umax][0] {
            umax = i;
        }
        if p[1] < pts[vmin][1] {
            vmin = i;
        }
        if p[1] > pts[vmax][1] {
            vmax = i;
        }
    }
    Ok(ConstraintConfig {
        u_min: VertexId(umin as u8),
        u_max: VertexId(umax as u8),
        v_min: VertexId(vmin as u8),
        v_max: VertexId(vmax as u8),
    })
}

/// `A t = b`, one row per box edge in `(u_min, u_max, v_min, v_max)` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem {
    pub a: [[f64; 3]; 4],
    pub b: [f64; 4],
}

/// Linearizes the four tight-fit equations in the translation.
///
/// For an edge at image coordinate `c` touched by vertex offset `X`, the
/// projection condition `p_r / p_3 = c` becomes
/// `(P[r][..3] - c P[2][..3]) t = c (M X~)_3 - (M X~)_r` with
/// `M = P diag(R_theta, 1)`.
pub fn build_system(
    intr: &Intrinsics,
    bbox: &Box2D,
    dims: &Dimensions,
    theta: f64,
    config: &ConstraintConfig,
) -> LinearSystem {
    let p = intr.matrix();
    let edges = [
        (bbox.u_min, 0, config.u_min),
        (bbox.u_max, 0, config.u_max),
        (bbox.v_min, 1, config.v_min),
        (bbox.v_max, 1, config.v_max),
    ];
    let mut sys = LinearSystem { a: [[0.0; 3]; 4], b: [0.0; 4] };
    for (k, (c, r, v)) in edges.into_iter().enumerate() {
        let m = intr.homogeneous(rotate_yaw(theta, vertex_offset(dims, v)));
        for j in 0..3 {
            sys.a[k][j] = p[r][j] - c * p[2][j];
        }
        sys.b[k] = c * m[2] - m[r];
    }
    sys
}

/// Least-squares translation via SVD; the residual is `||A t - b|| / 2`,
/// the RMS over the four equations.
pub fn solve_translation(sys: &LinearSystem) -> Result<([f64; 3], f64), GeometryError> {
    let a = Matrix4x3::from_fn(|i, j| sys.a[i][j]);
    let b = Vector4::from_column_slice(&sys.b);
    let svd = a.svd(true, true);
    let s = &svd.singular_values;
    let (lo, hi) = (s.min(), s.max());
    // Negated comparison so NaN also lands here.
    if !(lo >= DEGENERACY_RATIO * hi) || hi == 0.0 {
        return Err(GeometryError::DegenerateSystem(if hi > 0.0 { lo / hi } else { 0.0 }));
    }
    let degenerate = |_| GeometryError::DegenerateSystem(lo / hi);
    let mut x = svd.solve(&b, 0.0).map_err(degenerate)?;
    // The bidiagonal SVD loses a few digits on these systems; two rounds of
    // refinement on the residual bring the solution back to working precision.
    for _ in 0..2 {
        let r = b - a * x;
        x += svd.solve(&r, 0.0).map_err(degenerate)?;
    }
    let residual = (a * x - b).norm() / 2.0;
    Ok(([x[0], x[1], x[2]], residual))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveResult {
    pub t: [f64; 3],
    pub residual: f64,
    pub config: ConstraintConfig,
}

/// Solves every candidate and keeps the lowest-residual translation with
/// positive depth. Ties keep the earlier candidate.
pub fn exhaustive_search(
    intr: &Intrinsics,
    bbox: &Box2D,
    dims: &Dimensions,
    theta: f64,
    candidates: &[ConstraintConfig],
) -> Result<SolveResult, GeometryError> {
    let mut best: Option<SolveResult> = None;
    for config in candidates {
        let sys = build_system(intr, bbox, dims, theta, config);
        let Ok((t, residual)) = solve_translation(&sys) else {
            continue;
        };
        if !(t[2] > 0.0) || !residual.is_finite() {
            continue;
        }
        if best.map_or(true, |b| residual < b.residual) {
            best = Some(SolveResult { t, residual, config: *config });
        }
    }
    best.ok_or(GeometryError::NoFeasibleConfig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec::Vec;

    fn kitti_like() -> Intrinsics {
        Intrinsics::new([
            [721.5377, 0.0, 609.5593, 44.85728],
            [0.0, 721.5377, 172.854, 0.2163791],
            [0.0, 0.0, 1.0, 0.002745884],
        ])
        .unwrap()
    }

    #[test]
    fn vertex_offsets() {
        let unit = Dimensions::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(vertex_offset(&unit, VertexId::from_signs(false, false, false)), [0.5, 0.0, 0.5]);
        let d = Dimensions::new(4.0, 2.0, 2.0).unwrap();
        assert_eq!(vertex_offset(&d, VertexId::from_signs(true, true, false)), [-2.0, -2.0, 1.0]);
        let d = Dimensions::new(3.7, 1.4, 1.9).unwrap();
        let sum = VertexId::all().fold([0.0; 3], |acc, v| {
            let o = vertex_offset(&d, v);
            [acc[0] + o[0], acc[1] + o[1], acc[2] + o[2]]
        });
        assert!(sum[0].abs() < 1e-15 && sum[2].abs() < 1e-15);
        assert!((sum[1] + 4.0 * d.h).abs() < 1e-15);
    }

    #[test]
    fn vertex_id_bijection() {
        let d = Dimensions::new(3.0, 2.0, 1.0).unwrap();
        let offsets: Vec<_> = VertexId::all().map(|v| vertex_offset(&d, v)).collect();
        for i in 0..8 {
            for j in 0..i {
                assert_ne!(offsets[i], offsets[j]);
            }
        }
        assert!(VertexId::new(8).is_err());
    }

    #[test]
    fn projection_of_principal_axis_point() {
        let k = Intrinsics::pinhole(1.0, 1.0, 0.0, 0.0).unwrap();
        let pose = Pose::new(0.0, [0.0, 0.0, 10.0]);
        let tiny = Dimensions::new(1e-9, 1e-9, 1e-9).unwrap();
        let [u, v] = project(&k, &pose, &tiny, VertexId::from_signs(false, false, false)).unwrap();
        assert!(u.abs() < 1e-9 && v.abs() < 1e-9);
    }

    #[test]
    fn projection_matches_hand_evaluation() {
        // Vertex (+l/2, -h, +w/2) = (1, -2, 1) lands at (1, -2, 11) in the camera frame.
        let k = Intrinsics::pinhole(100.0, 100.0, 50.0, 50.0).unwrap();
        let pose = Pose::new(0.0, [0.0, 0.0, 10.0]);
        let d = Dimensions::new(2.0, 2.0, 2.0).unwrap();
        let [u, v] = project(&k, &pose, &d, VertexId::from_signs(false, true, false)).unwrap();
        assert!((u - 59.090_909_090_909_09).abs() < 1e-12);
        assert!((v - 31.818_181_818_181_82).abs() < 1e-12);
    }

    #[test]
    fn behind_camera_is_rejected() {
        let k = kitti_like();
        let pose = Pose::new(0.3, [0.0, 0.0, -5.0]);
        let d = Dimensions::new(4.0, 1.5, 1.6).unwrap();
        for v in VertexId::all() {
            assert!(matches!(project(&k, &pose, &d, v), Err(GeometryError::NonPositiveDepth(_))));
        }
        assert!(tight_box(&k, &pose, &d).is_err());
    }

    #[test]
    fn centered_cube_box_is_symmetric() {
        let k = Intrinsics::pinhole(700.0, 700.0, 600.0, 180.0).unwrap();
        let d = Dimensions::new(2.0, 2.0, 2.0).unwrap();
        // Bottom-face center one half-height below the axis centers the cube on it.
        let pose = Pose::new(0.0, [0.0, 1.0, 15.0]);
        let b = tight_box(&k, &pose, &d).unwrap();
        assert!(((b.u_min + b.u_max) / 2.0 - 600.0).abs() < 1e-9);
        assert!(((b.v_min + b.v_max) / 2.0 - 180.0).abs() < 1e-9);
    }

    #[test]
    fn box_is_periodic_in_yaw() {
        let k = kitti_like();
        let d = Dimensions::new(3.9, 1.5, 1.6).unwrap();
        let a = tight_box(&k, &Pose { theta: 0.7, t: [2.0, 1.6, 20.0] }, &d).unwrap();
        let b = tight_box(&k, &Pose { theta: 0.7 + core::f64::consts::TAU, t: [2.0, 1.6, 20.0] }, &d)
            .unwrap();
        assert!((a.u_min - b.u_min).abs() < 1e-9 && (a.v_max - b.v_max).abs() < 1e-9);
    }

    #[test]
    fn argmax_top_bottom_split() {
        let k = kitti_like();
        let d = Dimensions::new(3.9, 1.5, 1.6).unwrap();
        let c = argmax_vertices(&k, &Pose::new(-0.6, [-4.0, 1.7, 14.0]), &d).unwrap();
        assert!(c.v_min.is_top());
        assert!(!c.v_max.is_top());
        assert!(c.catalog_index().is_some());
    }

    #[test]
    fn catalog_shape() {
        let all = all_configs();
        assert_eq!(all.len(), 64);
        for w in all.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(all.iter().all(|c| c.u_min != c.u_max));
        assert_eq!(all[0].to_string(), "0-4-2-0");
    }

    #[test]
    fn config_text_round_trip() {
        for c in all_configs() {
            assert_eq!(c.to_string().parse::<ConstraintConfig>().unwrap(), *c);
        }
        for bad in ["", "0-1-2", "0-1-2-3-4", "0-1-2-8", "0-1-2-+3", "a-b-c-d", "00-1-2-3"] {
            assert!(bad.parse::<ConstraintConfig>().is_err(), "{bad}");
        }
    }

    #[test]
    fn square_consistent_system() {
        let sys = LinearSystem {
            a: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]],
            b: [1.0, 2.0, 3.0, 0.0],
        };
        let (t, r) = solve_translation(&sys).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-14 && (t[1] - 2.0).abs() < 1e-14 && (t[2] - 3.0).abs() < 1e-14);
        assert!(r < 1e-14);
    }

    #[test]
    fn inconsistent_rows_average() {
        // Rows 0 and 1 are the same equation with conflicting right-hand sides.
        let sys = LinearSystem {
            a: [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            b: [1.0, 3.0, 5.0, 7.0],
        };
        let (t, r) = solve_translation(&sys).unwrap();
        assert!((t[0] - 2.0).abs() < 1e-12);
        assert!((t[1] - 5.0).abs() < 1e-12 && (t[2] - 7.0).abs() < 1e-12);
        // ||(−1, 1, 0, 0)|| / 2
        assert!((r - core::f64::consts::SQRT_2 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_system_is_rejected() {
        let sys = LinearSystem {
            a: [[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 2.0]],
            b: [1.0, 2.0, 3.0, 6.0],
        };
        assert!(matches!(solve_translation(&sys), Err(GeometryError::DegenerateSystem(_))));
    }

    #[test]
    fn row_locality() {
        let k = kitti_like();
        let d = Dimensions::new(3.9, 1.5, 1.6).unwrap();
        let bbox = Box2D::new(500.0, 150.0, 600.0, 220.0).unwrap();
        let cfg = all_configs()[17];
        let a = build_system(&k, &bbox, &d, 0.4, &cfg);
        let mut shifted = bbox;
        shifted.u_min += 3.0;
        let b = build_system(&k, &shifted, &d, 0.4, &cfg);
        assert_ne!(a.a[0], b.a[0]);
        for row in 1..4 {
            assert_eq!(a.a[row], b.a[row]);
            assert_eq!(a.b[row], b.b[row]);
        }
    }

    #[test]
    fn search_with_no_feasible_candidate() {
        let k = Intrinsics::pinhole(700.0, 700.0, 600.0, 180.0).unwrap();
        let d = Dimensions::new(3.9, 1.5, 1.6).unwrap();
        let bbox = Box2D::new(550.0, 100.0, 650.0, 200.0).unwrap();
        assert!(exhaustive_search(&k, &bbox, &d, 0.0, all_configs()).is_ok());
        // At zero yaw, putting the +x corner on the left edge and the -x corner
        // (same z) on the right edge needs u_max - u_min = -f l / (t_z + w/2) > 0,
        // which only a translation behind the camera satisfies.
        let mirrored: Vec<ConstraintConfig> = all_configs()
            .iter()
            .copied()
            .filter(|c| c.u_min.index() == 0 && c.u_max.index() == 4)
            .collect();
        assert_eq!(mirrored.len(), 8);
        assert_eq!(exhaustive_search(&k, &bbox, &d, 0.0, &mirrored), Err(GeometryError::NoFeasibleConfig));
        assert_eq!(exhaustive_search(&k, &bbox, &d, 0.0, &[]), Err(GeometryError::NoFeasibleConfig));
    }

    #[test]
    fn invalid_inputs() {
        assert!(Intrinsics::pinhole(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(Intrinsics::new([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]]).is_err());
        assert!(Box2D::new(2.0, 0.0, 1.0, 1.0).is_err());
        assert!(Dimensions::new(1.0, 0.0, 1.0).is_err());
    }
}

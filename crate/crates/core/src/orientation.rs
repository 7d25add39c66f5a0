//! Local/global yaw conversion, MultiBin angle encoding, and the training
//! loss terms evaluated as plain functions (with analytic gradients).
//!
//! Angle conventions: `theta_ray = atan2(t_x, t_z)`. The global angle that
//! [`local_to_global`] returns is yaw about the *up* axis, which is
//! `-rotation_y` in the KITTI y-down camera frame. With that reading the
//! local orientation is exactly KITTI's `alpha = rotation_y - theta_ray`,
//! wrapped to `[0, 2π)`. [`local_orientation`] and [`yaw_from_local`] do
//! the bookkeeping for KITTI yaw values.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::angle::{wrap_pi, wrap_pi_half_open, wrap_two_pi};
use crate::geometry::{Dimensions, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum OrientationError {
    #[error("object depth {0} is not positive")]
    NonPositiveDepth(f64),
    #[error("need n_bins >= 2 and 0 <= overlap < 2π/n_bins")]
    InvalidBins,
    #[error("expected {expected} per-bin values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("class index {index} out of range for {len} logits")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("loss weights must be non-negative")]
    NegativeWeight,
}

/// Angle of the ray from the camera to an object's anchor point.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RayAngle(f64);

impl RayAngle {
    pub fn from_radians(a: f64) -> Self {
        Self(a)
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Object yaw relative to the viewing ray, in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LocalOrientation(f64);

impl LocalOrientation {
    pub fn new(radians: f64) -> Self {
        Self(wrap_two_pi(radians))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

pub fn ray_angle(t: [f64; 3]) -> Result<RayAngle, OrientationError> {
    if !(t[2] > 0.0) {
        return Err(OrientationError::NonPositiveDepth(t[2]));
    }
    Ok(RayAngle(libm::atan2(t[0], t[2])))
}

/// `2π - θ_ray - θ_l`, wrapped to `(-π, π]`.
pub fn local_to_global(theta_l: LocalOrientation, ray: RayAngle) -> f64 {
    wrap_pi(TAU - ray.0 - theta_l.0)
}

/// Inverse of [`local_to_global`].
pub fn global_to_local(theta: f64, ray: RayAngle) -> LocalOrientation {
    LocalOrientation::new(TAU - ray.0 - theta)
}

/// Local orientation of a pose whose `theta` is a KITTI `rotation_y`.
pub fn local_orientation(pose: &Pose) -> Result<LocalOrientation, OrientationError> {
    let ray = ray_angle(pose.t)?;
    Ok(global_to_local(-pose.theta, ray))
}

/// KITTI `rotation_y` for a local orientation seen along `ray`.
pub fn yaw_from_local(theta_l: LocalOrientation, ray: RayAngle) -> f64 {
    wrap_pi(-local_to_global(theta_l, ray))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinTarget {
    pub covers: bool,
    /// Wrapped `theta_l - center`; meaningful only when `covers`.
    pub residual: f64,
}

/// MultiBin target for one angle: which bins cover it and the residual
/// from each bin center.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiBinEncoding {
    pub n_bins: usize,
    pub overlap: f64,
    pub bin_centers: Vec<f64>,
    pub targets: Vec<BinTarget>,
}

impl MultiBinEncoding {
    /// Half-width of each bin's coverage interval.
    pub fn half_width(&self) -> f64 {
        PI / self.n_bins as f64 + self.overlap / 2.0
    }

    pub fn covering(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().enumerate().filter(|(_, t)| t.covers).map(|(i, _)| i)
    }

    /// `n_θ`: the number of bins covering the encoded angle.
    pub fn n_covering(&self) -> usize {
        self.covering().count()
    }
}

/// Bin `k` is centered at `2πk/n` and covers `[c - π/n - o/2, c + π/n + o/2)`.
pub fn multibin_encode(
    theta_l: LocalOrientation,
    n_bins: usize,
    overlap: f64,
) -> Result<MultiBinEncoding, OrientationError> {
    if n_bins < 2 || !(overlap >= 0.0) || overlap >= TAU / n_bins as f64 {
        return Err(OrientationError::InvalidBins);
    }
    let half = PI / n_bins as f64 + overlap / 2.0;
    let bin_centers: Vec<f64> = (0..n_bins).map(|k| TAU * k as f64 / n_bins as f64).collect();
    let targets = bin_centers
        .iter()
        .map(|&c| {
            let d = wrap_pi_half_open(theta_l.0 - c);
            BinTarget { covers: -half <= d && d < half, residual: d }
        })
        .collect();
    Ok(MultiBinEncoding { n_bins, overlap, bin_centers, targets })
}

/// Picks the most confident bin (lowest index on ties) and adds its
/// predicted residual, given as an unnormalized `(sin, cos)` pair.
pub fn multibin_decode(
    enc: &MultiBinEncoding,
    confidences: &[f64],
    residual_sincos: &[(f64, f64)],
) -> Result<LocalOrientation, OrientationError> {
    for got in [confidences.len(), residual_sincos.len()] {
        if got != enc.n_bins {
            return Err(OrientationError::LengthMismatch { expected: enc.n_bins, got });
        }
    }
    let mut best = 0;
    for (i, &c) in confidences.iter().enumerate() {
        if c > confidences[best] {
            best = i;
        }
    }
    let (s, c) = residual_sincos[best];
    Ok(LocalOrientation::new(enc.bin_centers[best] + libm::atan2(s, c)))
}

fn check_len(expected: usize, got: usize) -> Result<(), OrientationError> {
    if expected == got {
        Ok(())
    } else {
        Err(OrientationError::LengthMismatch { expected, got })
    }
}

/// Cosine angle loss `-(1/n_θ) Σ cos(θ* - c_i - Δθ_i)` over covering bins.
pub fn loss_ang(
    theta_star: LocalOrientation,
    enc: &MultiBinEncoding,
    predicted_residuals: &[f64],
) -> Result<f64, OrientationError> {
    check_len(enc.n_bins, predicted_residuals.len())?;
    let n = enc.n_covering() as f64;
    let sum: f64 = enc
        .covering()
        .map(|i| libm::cos(theta_star.0 - enc.bin_centers[i] - predicted_residuals[i]))
        .sum();
    Ok(-sum / n)
}

/// Gradient of [`loss_ang`] with respect to each predicted residual.
pub fn loss_ang_grad(
    theta_star: LocalOrientation,
    enc: &MultiBinEncoding,
    predicted_residuals: &[f64],
) -> Result<Vec<f64>, OrientationError> {
    check_len(enc.n_bins, predicted_residuals.len())?;
    let n = enc.n_covering() as f64;
    let mut grad = vec![0.0; enc.n_bins];
    for i in enc.covering() {
        grad[i] = -libm::sin(theta_star.0 - enc.bin_centers[i] - predicted_residuals[i]) / n;
    }
    Ok(grad)
}

fn dims_error(true_dims: &Dimensions, mean_dims: &Dimensions, pred: &[f64; 3]) -> [f64; 3] {
    [
        true_dims.l - mean_dims.l - pred[0],
        true_dims.h - mean_dims.h - pred[1],
        true_dims.w - mean_dims.w - pred[2],
    ]
}

/// Mean squared error of the dimension residual, `(l, h, w)` order.
pub fn loss_dims(true_dims: &Dimensions, mean_dims: &Dimensions, predicted_residual: &[f64; 3]) -> f64 {
    dims_error(true_dims, mean_dims, predicted_residual).iter().map(|e| e * e).sum::<f64>() / 3.0
}

pub fn loss_dims_grad(
    true_dims: &Dimensions,
    mean_dims: &Dimensions,
    predicted_residual: &[f64; 3],
) -> [f64; 3] {
    dims_error(true_dims, mean_dims, predicted_residual).map(|e| -2.0 * e / 3.0)
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + libm::log(logits.iter().map(|&x| libm::exp(x - m)).sum::<f64>())
}

/// Cross-entropy `-log softmax(logits)[true_index]`.
pub fn loss_softmax(true_index: usize, logits: &[f64]) -> Result<f64, OrientationError> {
    if true_index >= logits.len() {
        return Err(OrientationError::IndexOutOfRange { index: true_index, len: logits.len() });
    }
    Ok(log_sum_exp(logits) - logits[true_index])
}

/// `softmax(logits) - onehot(true_index)`.
pub fn loss_softmax_grad(true_index: usize, logits: &[f64]) -> Result<Vec<f64>, OrientationError> {
    if true_index >= logits.len() {
        return Err(OrientationError::IndexOutOfRange { index: true_index, len: logits.len() });
    }
    let lse = log_sum_exp(logits);
    let mut grad: Vec<f64> = logits.iter().map(|&x| libm::exp(x - lse)).collect();
    grad[true_index] -= 1.0;
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub dims: f64,
    pub ang: f64,
    pub conf: f64,
    pub view: f64,
}

impl LossWeights {
    /// `w_{1:4} = [1, 4, 8, 4]`.
    pub const TRAINING_DEFAULT: LossWeights = LossWeights { dims: 1.0, ang: 4.0, conf: 8.0, view: 4.0 };

    pub fn new(dims: f64, ang: f64, conf: f64, view: f64) -> Result<Self, OrientationError> {
        if [dims, ang, conf, view].iter().all(|w| *w >= 0.0) {
            Ok(Self { dims, ang, conf, view })
        } else {
            Err(OrientationError::NegativeWeight)
        }
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::TRAINING_DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub dims: f64,
    pub ang: f64,
    pub conf: f64,
    pub view: f64,
}

pub fn loss_total(parts: &LossParts, weights: &LossWeights) -> f64 {
    weights.dims * parts.dims + weights.ang * parts.ang + weights.conf * parts.conf + weights.view * parts.view
}

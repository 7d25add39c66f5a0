//! Angle normalization helpers shared by every module.

use core::f64::consts::{PI, TAU};

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi(angle: f64) -> f64 {
    let r = angle - TAU * libm::floor((angle + PI) / TAU);
    if r <= -PI {
        r + TAU
    } else if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi(angle: f64) -> f64 {
    let r = angle - TAU * libm::floor(angle / TAU);
    if r >= TAU || r < 0.0 {
        0.0
    } else {
        r
    }
}

/// Wraps an angle into `[-π, π)`. Used for bin residuals where the
/// half-open convention matters.
pub(crate) fn wrap_pi_half_open(angle: f64) -> f64 {
    let r = angle - TAU * libm::floor((angle + PI) / TAU);
    if r >= PI {
        r - TAU
    } else if r < -PI {
        r + TAU
    } else {
        r
    }
}

//! Float helpers over `libm`, so results do not depend on the host libm.

use core::f64::consts::PI;

pub const TAU: f64 = 2.0 * PI;

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub fn atan(x: f64) -> f64 {
    libm::atan(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let r = libm::remainder(angle, TAU);
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Number of whole `step`s in `span`, tolerant to representation error
/// (`0.3 / 0.1` counts as 3).
pub fn whole_steps(span: f64, step: f64) -> i64 {
    floor(span / step + 1e-9) as i64
}

/// `ceil(span / step)` with the same tolerance as [`whole_steps`].
pub fn ceil_steps(span: f64, step: f64) -> usize {
    let n = ceil(span / step - 1e-9);
    if n <= 0.0 {
        0
    } else {
        n as usize
    }
}

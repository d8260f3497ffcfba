//! Kinematic bicycle model over a discrete (acceleration, steering) grid.
//!
//! The reference point of [`EgoState`] is the rear axle. Integration is
//! explicit Euler: the position update uses the pre-update speed and heading.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::geometry::OrientedBox;
use crate::math::{atan, cos, hypot, round, sin, tan, wrap_angle};

/// Pose-velocity state of the ego vehicle (rear-axle reference).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EgoState {
    pub x: f64,
    pub y: f64,
    /// Radians, kept in `(-pi, pi]`.
    pub heading: f64,
    /// m/s, never negative.
    pub velocity: f64,
}

impl EgoState {
    pub fn new(x: f64, y: f64, heading: f64, velocity: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_angle(heading),
            velocity: velocity.max(0.0),
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.heading)
    }
}

/// Planar pose without velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "[f64; 3]", into = "[f64; 3]"))]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }
}

impl From<[f64; 3]> for Pose {
    fn from([x, y, heading]: [f64; 3]) -> Self {
        Pose { x, y, heading }
    }
}

impl From<Pose> for [f64; 3] {
    fn from(p: Pose) -> Self {
        [p.x, p.y, p.heading]
    }
}

/// Control input: longitudinal acceleration (m/s²) and front-wheel steering
/// angle (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Action {
    pub accel: f64,
    pub steer: f64,
}

impl Action {
    pub const fn new(accel: f64, steer: f64) -> Self {
        Self { accel, steer }
    }
}

/// Cell of the 13 × 13 action grid. Index 6 is zero on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridIndex {
    pub accel: u8,
    pub steer: u8,
}

impl GridIndex {
    pub const CENTER: GridIndex = GridIndex {
        accel: ActionGrid::CENTER as u8,
        steer: ActionGrid::CENTER as u8,
    };

    pub const fn new(accel: u8, steer: u8) -> Self {
        Self { accel, steer }
    }

    /// Signed index offsets from another cell.
    pub fn offset_from(self, other: GridIndex) -> (i32, i32) {
        (
            self.accel as i32 - other.accel as i32,
            self.steer as i32 - other.steer as i32,
        )
    }
}

/// The discretized action space: 13 accelerations over [-3, 3] m/s² and
/// 13 steering angles over [-pi/4, pi/4] rad.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    accel_values: [f64; ActionGrid::SIZE],
    steer_values: [f64; ActionGrid::SIZE],
    accel_step: f64,
    steer_step: f64,
}

impl Default for ActionGrid {
    fn default() -> Self {
        Self::new(3.0, FRAC_PI_4)
    }
}

impl ActionGrid {
    pub const SIZE: usize = 13;
    pub const CENTER: usize = 6;

    /// Symmetric grid with `SIZE` values per axis spanning `[-max, max]`.
    pub fn new(accel_max: f64, steer_max: f64) -> Self {
        let accel_step = accel_max / Self::CENTER as f64;
        let steer_step = steer_max / Self::CENTER as f64;
        // (i - 6) * step keeps values[i] == -values[12 - i] bit for bit.
        let value = |i: usize, step: f64| (i as f64 - Self::CENTER as f64) * step;
        let mut accel_values = [0.0; Self::SIZE];
        let mut steer_values = [0.0; Self::SIZE];
        for i in 0..Self::SIZE {
            accel_values[i] = value(i, accel_step);
            steer_values[i] = value(i, steer_step);
        }
        Self {
            accel_values,
            steer_values,
            accel_step,
            steer_step,
        }
    }

    pub fn accel_values(&self) -> &[f64; Self::SIZE] {
        &self.accel_values
    }

    pub fn steer_values(&self) -> &[f64; Self::SIZE] {
        &self.steer_values
    }

    pub fn accel_step(&self) -> f64 {
        self.accel_step
    }

    pub fn steer_step(&self) -> f64 {
        self.steer_step
    }

    pub fn action(&self, idx: GridIndex) -> Action {
        Action::new(
            self.accel_values[idx.accel as usize],
            self.steer_values[idx.steer as usize],
        )
    }

    /// Clamps an action into the grid's bounds.
    pub fn clamp(&self, action: Action) -> Action {
        let (amin, amax) = (self.accel_values[0], self.accel_values[Self::SIZE - 1]);
        let (smin, smax) = (self.steer_values[0], self.steer_values[Self::SIZE - 1]);
        Action::new(action.accel.clamp(amin, amax), action.steer.clamp(smin, smax))
    }

    /// Nearest grid cell. Exact half-way ties round toward the zero cell;
    /// out-of-range values clamp to the boundary.
    pub fn snap(&self, action: Action) -> GridIndex {
        GridIndex::new(
            snap_axis(action.accel, self.accel_step),
            snap_axis(action.steer, self.steer_step),
        )
    }

    /// Iterates all 169 cells, acceleration-major.
    pub fn cells(&self) -> impl Iterator<Item = GridIndex> {
        (0..Self::SIZE as u8)
            .flat_map(|a| (0..Self::SIZE as u8).map(move |s| GridIndex::new(a, s)))
    }
}

fn snap_axis(value: f64, step: f64) -> u8 {
    let f = value / step;
    if !f.is_finite() {
        return if f > 0.0 { 12 } else if f < 0.0 { 0 } else { 6 };
    }
    let trunc = f as i64 as f64;
    let k = if (f - trunc).abs() == 0.5 {
        trunc
    } else {
        round(f)
    };
    let c = ActionGrid::CENTER as f64;
    (k.clamp(-c, c) + c) as u8
}

/// Vehicle geometry. The footprint center sits `length / 2 - rear_overhang`
/// ahead of the rear axle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub length: f64,
    pub width: f64,
    pub rear_overhang: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 3.089,
            length: 5.0,
            width: 2.0,
            rear_overhang: 1.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.wheelbase, self.length, self.width];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config("vehicle dimensions must be positive"));
        }
        if self.wheelbase >= self.length {
            return Err(Error::config("wheelbase must be shorter than vehicle length"));
        }
        if !(self.rear_overhang >= 0.0 && self.rear_overhang < self.length) {
            return Err(Error::config("rear_overhang must lie within the vehicle length"));
        }
        Ok(())
    }

    /// Oriented footprint of the vehicle at `state`.
    pub fn footprint(&self, state: &EgoState) -> OrientedBox {
        let offset = self.length / 2.0 - self.rear_overhang;
        let (s, c) = (sin(state.heading), cos(state.heading));
        OrientedBox::new(
            state.x + offset * c,
            state.y + offset * s,
            state.heading,
            self.length,
            self.width,
        )
    }
}

/// One explicit-Euler step of the bicycle model.
pub fn integrate(state: &EgoState, action: Action, dt: f64, params: &VehicleParams) -> EgoState {
    let v = state.velocity;
    let psi = state.heading;
    EgoState {
        x: state.x + v * cos(psi) * dt,
        y: state.y + v * sin(psi) * dt,
        heading: wrap_angle(psi + v * tan(action.steer) / params.wheelbase * dt),
        velocity: (v + action.accel * dt).max(0.0),
    }
}

/// Holds `action` for `n_sub` steps and returns every intermediate state
/// (the initial state excluded).
pub fn rollout(
    state: &EgoState,
    action: Action,
    n_sub: usize,
    dt: f64,
    params: &VehicleParams,
) -> Vec<EgoState> {
    let mut out = Vec::with_capacity(n_sub);
    let mut cur = *state;
    for _ in 0..n_sub {
        cur = integrate(&cur, action, dt, params);
        out.push(cur);
    }
    out
}

/// Speed below which the steering inversion is undefined and reported as 0.
pub const MIN_STEER_INVERSION_SPEED: f64 = 0.1;

/// Recovers the control sequence that produced a uniformly sampled pose
/// trajectory, by finite differences. `n` poses yield `n - 2` actions,
/// each clamped to `grid`.
pub fn trajectory_to_actions(
    poses: &[Pose],
    dt: f64,
    params: &VehicleParams,
    grid: &ActionGrid,
) -> Result<Vec<Action>> {
    if poses.len() < 3 {
        return Err(Error::malformed(alloc::format!(
            "need at least 3 poses to derive actions, got {}",
            poses.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::malformed("pose spacing must be positive"));
    }
    let speeds: Vec<f64> = poses
        .windows(2)
        .map(|w| hypot(w[1].x - w[0].x, w[1].y - w[0].y) / dt)
        .collect();
    let actions = (0..poses.len() - 2)
        .map(|k| {
            let v = speeds[k];
            let accel = (speeds[k + 1] - v) / dt;
            let yaw_rate = wrap_angle(poses[k + 1].heading - poses[k].heading) / dt;
            let steer = if v < MIN_STEER_INVERSION_SPEED {
                0.0
            } else {
                atan(params.wheelbase * yaw_rate / v)
            };
            grid.clamp(Action::new(accel, steer))
        })
        .collect();
    Ok(actions)
}

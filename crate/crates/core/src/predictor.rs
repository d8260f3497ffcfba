//! Learned world features behind a pluggable interface: future poses of every
//! agent and a prior trajectory for the ego.
//!
//! Poses in a [`PredictionSet`] are sampled every [`TICK`] seconds starting at
//! the snapshot time (sample 0 is the current pose).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kinematics::{integrate, trajectory_to_actions, Action, ActionGrid, EgoState, Pose, VehicleParams};
use crate::math::{atan, atan2, ceil_steps, cos, hypot, sin, whole_steps, wrap_angle};
use crate::world::{AgentTrack, WorldSnapshot};
use crate::TICK;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub horizon: f64,
    pub ego_prior: Vec<Pose>,
    pub agent_futures: BTreeMap<String, Vec<Pose>>,
}

impl PredictionSet {
    /// Number of samples every pose list carries for `horizon`.
    pub fn samples_for(horizon: f64) -> usize {
        ceil_steps(horizon, TICK)
    }

    /// Checks lengths and that every snapshot agent has a future.
    pub fn validate(&self, snapshot: &WorldSnapshot<'_>) -> Result<()> {
        let n = Self::samples_for(self.horizon);
        if self.ego_prior.len() != n {
            return Err(Error::malformed(alloc::format!(
                "ego prior has {} samples, expected {n}",
                self.ego_prior.len()
            )));
        }
        for agent in &snapshot.agents {
            match self.agent_futures.get(&agent.id) {
                None => return Err(Error::PredictionUnavailable(agent.id.clone())),
                Some(f) if f.len() != n => {
                    return Err(Error::malformed(alloc::format!(
                        "future of {} has {} samples, expected {n}",
                        agent.id,
                        f.len()
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

pub trait Predictor {
    fn predict(&self, snapshot: &WorldSnapshot<'_>, horizon: f64) -> Result<PredictionSet>;
}

fn check_horizon(horizon: f64) -> Result<usize> {
    if !(horizon > 0.0) {
        return Err(Error::config("prediction horizon must be positive"));
    }
    Ok(PredictionSet::samples_for(horizon))
}

fn extrapolate(pose: Pose, speed: f64, n: usize) -> Vec<Pose> {
    let (c, s) = (cos(pose.heading), sin(pose.heading));
    (0..n)
        .map(|i| {
            let d = speed * i as f64 * TICK;
            Pose::new(pose.x + d * c, pose.y + d * s, pose.heading)
        })
        .collect()
}

/// Straight-line extrapolation at the current speed and heading.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantVelocity;

impl Predictor for ConstantVelocity {
    fn predict(&self, snapshot: &WorldSnapshot<'_>, horizon: f64) -> Result<PredictionSet> {
        let n = check_horizon(horizon)?;
        let agent_futures = snapshot
            .agents
            .iter()
            .map(|a| {
                let speed = a
                    .previous
                    .map_or(0.0, |prev| hypot(a.pose.x - prev.x, a.pose.y - prev.y) / TICK);
                (a.id.clone(), extrapolate(a.pose, speed, n))
            })
            .collect();
        Ok(PredictionSet {
            horizon,
            ego_prior: extrapolate(snapshot.ego.pose(), snapshot.ego.velocity, n),
            agent_futures,
        })
    }
}

/// Ground-truth futures read straight from the scenario tracks. The ego
/// prior drives an [`ExpertDriver`] from the current ego state when an expert
/// path is available, otherwise it is a constant-velocity extrapolation.
#[derive(Debug, Clone)]
pub struct Scripted<'a> {
    tracks: &'a [AgentTrack],
    expert: Option<ExpertDriver<'a>>,
    params: VehicleParams,
}

impl<'a> Scripted<'a> {
    pub fn new(tracks: &'a [AgentTrack], ego_expert: Option<&'a [Pose]>, params: VehicleParams) -> Self {
        Self {
            tracks,
            expert: ego_expert.filter(|e| !e.is_empty()).map(ExpertDriver::new),
            params,
        }
    }
}

fn resample(samples: &[Pose], t0: f64, n: usize) -> Vec<Pose> {
    (0..n)
        .map(|i| crate::world::agent_pose_at(samples, t0 + i as f64 * TICK))
        .collect()
}

impl Predictor for Scripted<'_> {
    fn predict(&self, snapshot: &WorldSnapshot<'_>, horizon: f64) -> Result<PredictionSet> {
        let n = check_horizon(horizon)?;
        let mut agent_futures = BTreeMap::new();
        for agent in &snapshot.agents {
            let track = self
                .tracks
                .iter()
                .find(|t| t.id == agent.id)
                .ok_or_else(|| Error::PredictionUnavailable(agent.id.clone()))?;
            agent_futures.insert(agent.id.clone(), resample(&track.trajectory, snapshot.time, n));
        }
        let ego_prior = match &self.expert {
            Some(driver) => driver.drive(snapshot.ego, n, &self.params, &ActionGrid::default()),
            None => extrapolate(snapshot.ego.pose(), snapshot.ego.velocity, n),
        };
        Ok(PredictionSet {
            horizon,
            ego_prior,
            agent_futures,
        })
    }
}

/// Shortest lookahead of the pursuit steering, meters.
const PURSUIT_MIN_LOOKAHEAD: f64 = 4.0;
/// Lookahead grows with speed over this many seconds.
const PURSUIT_LOOKAHEAD_TIME: f64 = 1.0;
/// Time constant of the speed tracking, seconds.
const SPEED_TIME_CONSTANT: f64 = 0.5;

/// Expert behavior replayed from an arbitrary ego state: steers toward a
/// lookahead point on the expert path (pure pursuit) and tracks the speed the
/// expert had when it last occupied the same path position.
///
/// Replaying the expert by clock time would ask a lagging ego to copy
/// actions meant for a different place and speed.
#[derive(Debug, Clone)]
pub struct ExpertDriver<'a> {
    path: &'a [Pose],
    /// Arc-length of each expert sample.
    cum_s: Vec<f64>,
    /// Expert speed leaving each sample.
    speeds: Vec<f64>,
}

impl<'a> ExpertDriver<'a> {
    /// `path` holds expert poses sampled every [`TICK`]; it must not be empty.
    pub fn new(path: &'a [Pose]) -> Self {
        let mut cum_s = Vec::with_capacity(path.len());
        cum_s.push(0.0);
        for w in path.windows(2) {
            cum_s.push(cum_s[cum_s.len() - 1] + hypot(w[1].x - w[0].x, w[1].y - w[0].y));
        }
        let mut speeds: Vec<f64> = cum_s.windows(2).map(|w| (w[1] - w[0]) / TICK).collect();
        speeds.push(speeds.last().copied().unwrap_or(0.0));
        Self { path, cum_s, speeds }
    }

    /// Arc-length of the closest point on the path.
    pub fn project(&self, p: Point) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for (i, w) in self.path.windows(2).enumerate() {
            let (ex, ey) = (w[1].x - w[0].x, w[1].y - w[0].y);
            let len2 = ex * ex + ey * ey;
            if len2 <= 0.0 {
                continue;
            }
            let t = (((p.x - w[0].x) * ex + (p.y - w[0].y) * ey) / len2).clamp(0.0, 1.0);
            let d = hypot(w[0].x + t * ex - p.x, w[0].y + t * ey - p.y);
            if d < best.0 {
                best = (d, self.cum_s[i] + t * (self.cum_s[i + 1] - self.cum_s[i]));
            }
        }
        best.1
    }

    /// Point at arc-length `s`; past the end the last segment is extended.
    pub fn point_at(&self, s: f64) -> Point {
        let last_seg = self.path.windows(2).rposition(|w| w[0].x != w[1].x || w[0].y != w[1].y);
        let Some(last_seg) = last_seg else {
            let p = self.path[0];
            return Point::new(p.x + s * cos(p.heading), p.y + s * sin(p.heading));
        };
        let i = self.cum_s.partition_point(|c| *c <= s).clamp(1, last_seg + 1) - 1;
        let (a, b) = (self.path[i], self.path[i + 1]);
        let len = self.cum_s[i + 1] - self.cum_s[i];
        let t = if len > 0.0 { (s - self.cum_s[i]) / len } else { 0.0 };
        Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    }

    /// Expert speed at the last sample at or behind `s`.
    pub fn target_speed(&self, s: f64) -> f64 {
        let i = self.cum_s.partition_point(|c| *c <= s + 1e-9).max(1) - 1;
        self.speeds[i]
    }

    /// `n` poses from `start` (sample 0 is the start pose), integrated with
    /// the ego's kinematics and the grid's bounds.
    pub fn drive(&self, start: EgoState, n: usize, params: &VehicleParams, grid: &ActionGrid) -> Vec<Pose> {
        let accel_max = grid.accel_values()[ActionGrid::SIZE - 1];
        let steer_max = grid.steer_values()[ActionGrid::SIZE - 1];
        let mut out = Vec::with_capacity(n);
        let mut cur = start;
        if n > 0 {
            out.push(cur.pose());
        }
        while out.len() < n {
            let s = self.project(Point::new(cur.x, cur.y));
            let aim = self.point_at(s + (cur.velocity * PURSUIT_LOOKAHEAD_TIME).max(PURSUIT_MIN_LOOKAHEAD));
            let (dx, dy) = (aim.x - cur.x, aim.y - cur.y);
            let alpha = wrap_angle(atan2(dy, dx) - cur.heading);
            let reach = hypot(dx, dy).max(1e-6);
            let steer = atan(2.0 * params.wheelbase * sin(alpha) / reach).clamp(-steer_max, steer_max);
            let accel = ((self.target_speed(s) - cur.velocity) / SPEED_TIME_CONSTANT).clamp(-accel_max, accel_max);
            cur = integrate(&cur, Action::new(accel, steer), TICK, params);
            out.push(cur.pose());
        }
        out
    }
}

/// Turns the ego prior trajectory into one snapped grid action per tree
/// depth: finite-difference actions are averaged over each node interval.
/// Depths whose interval is not fully covered are dropped.
pub fn ego_prior_actions(
    prediction: &PredictionSet,
    params: &VehicleParams,
    grid: &ActionGrid,
    node_duration: f64,
) -> Result<Vec<Action>> {
    let prior = &prediction.ego_prior;
    if prior.is_empty() {
        return Err(Error::malformed("ego prior is empty"));
    }
    let per_node = whole_steps(node_duration, TICK).max(1) as usize;
    if prior.len() < per_node + 2 {
        return Ok(Vec::new());
    }
    let actions = trajectory_to_actions(prior, TICK, params, grid)?;
    Ok(actions
        .chunks_exact(per_node)
        .map(|chunk| {
            let n = chunk.len() as f64;
            let accel = chunk.iter().map(|a| a.accel).sum::<f64>() / n;
            let steer = chunk.iter().map(|a| a.steer).sum::<f64>() / n;
            grid.action(grid.snap(Action::new(accel, steer)))
        })
        .collect())
}

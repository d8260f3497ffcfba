//! Explicit per-node driving reward with a per-component breakdown.

use crate::error::{Error, Result};
use crate::kinematics::{EgoState, VehicleParams};
use crate::math::sin;
use crate::world::{footprint_in_drivable, project_to_centerline, AgentKind, MapModel, ObstacleField};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RewardConfig {
    pub collision_vehicle_pedestrian: f64,
    pub collision_object: f64,
    pub off_route: f64,
    pub off_drivable: f64,
    pub heading_weight: f64,
    pub lateral_weight: f64,
    /// Lateral distance cap, meters.
    pub lateral_cap: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            collision_vehicle_pedestrian: -5.0,
            collision_object: -2.0,
            off_route: -0.5,
            off_drivable: -1.0,
            heading_weight: 0.5,
            lateral_weight: 0.5,
            lateral_cap: 5.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let penalties = [
            self.collision_vehicle_pedestrian,
            self.collision_object,
            self.off_route,
            self.off_drivable,
        ];
        if penalties.iter().any(|p| !(*p <= 0.0)) {
            return Err(Error::config("reward penalties must be <= 0"));
        }
        if !(self.heading_weight > 0.0 && self.lateral_weight > 0.0 && self.lateral_cap > 0.0) {
            return Err(Error::config("reward weights and lateral_cap must be > 0"));
        }
        Ok(())
    }

    /// Smallest total any node can receive.
    pub fn lower_bound(&self) -> f64 {
        self.collision_vehicle_pedestrian.min(self.collision_object)
            + self.off_route
            + self.off_drivable
            - self.heading_weight
            - self.lateral_weight * self.lateral_cap
    }

    pub fn collision_penalty(&self, kind: Option<AgentKind>) -> f64 {
        match kind {
            Some(k) if k.is_severe() => self.collision_vehicle_pedestrian,
            Some(_) => self.collision_object,
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardBreakdown {
    pub progress: f64,
    pub collision: f64,
    pub route: f64,
    pub drivable: f64,
    pub heading_center: f64,
    pub lateral_center: f64,
    pub total: f64,
}

impl RewardBreakdown {
    /// Builds a breakdown whose `total` is the component sum.
    pub fn from_components(
        progress: f64,
        collision: f64,
        route: f64,
        drivable: f64,
        heading_center: f64,
        lateral_center: f64,
    ) -> Self {
        Self {
            progress,
            collision,
            route,
            drivable,
            heading_center,
            lateral_center,
            total: progress + collision + route + drivable + heading_center + lateral_center,
        }
    }
}

/// One integration sub-step and its time relative to the search root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Substep {
    pub time: f64,
    pub state: EgoState,
}

/// What the reward is evaluated against.
pub struct RewardContext<'a> {
    pub map: &'a MapModel,
    pub obstacles: &'a ObstacleField,
    pub cfg: &'a RewardConfig,
    pub params: &'a VehicleParams,
}

/// Reward of the node reached after `substeps` from `parent`.
///
/// Collisions are checked at every sub-step and penalized once with the
/// most severe class; route, drivable-area and centerline terms use the end
/// state only.
pub fn evaluate_node(parent: &EgoState, substeps: &[Substep], node_time: f64, ctx: &RewardContext<'_>) -> Result<RewardBreakdown> {
    let parent_s = project_to_centerline(&parent.pose(), ctx.map, true)?.arc_length;
    evaluate_from(parent_s, substeps, node_time, ctx).map(|(r, _)| r)
}

const SPACING_TOL: f64 = 1e-6;

/// [`evaluate_node`] with the parent's route arc-length already known; also
/// reports the collision class that was penalized.
pub(crate) fn evaluate_from(
    parent_s: f64,
    substeps: &[Substep],
    node_time: f64,
    ctx: &RewardContext<'_>,
) -> Result<(RewardBreakdown, Option<AgentKind>)> {
    let last = substeps.last().ok_or_else(|| Error::malformed("node has no sub-steps"))?;
    if (last.time - node_time).abs() > SPACING_TOL {
        return Err(Error::malformed("last sub-step does not end at the node time"));
    }
    let dt = if substeps.len() > 1 {
        substeps[1].time - substeps[0].time
    } else {
        crate::TICK
    };
    if !(dt > 0.0) || substeps.windows(2).any(|w| ((w[1].time - w[0].time) - dt).abs() > SPACING_TOL) {
        return Err(Error::malformed("sub-steps are not uniformly spaced"));
    }
    let duration = substeps.len() as f64 * dt;
    let cfg = ctx.cfg;
    let end = last.state;

    let mut worst: Option<AgentKind> = None;
    for step in substeps {
        let fp = ctx.params.footprint(&step.state);
        match ctx.obstacles.collision_at(&fp, step.time) {
            Some(k) if k.is_severe() => {
                worst = Some(k);
                break;
            }
            Some(k) => {
                worst.get_or_insert(k);
            }
            None => {}
        }
    }

    let route_proj = project_to_centerline(&end.pose(), ctx.map, true)?;
    let progress = ((route_proj.arc_length - parent_s) / (route_proj.speed_limit * duration)).clamp(0.0, 1.0);
    let route = if route_proj.on_route() { 0.0 } else { cfg.off_route };
    let drivable = if footprint_in_drivable(&ctx.params.footprint(&end), ctx.map) {
        0.0
    } else {
        cfg.off_drivable
    };
    let center = project_to_centerline(&end.pose(), ctx.map, false)?;
    let heading_center = -sin(center.heading_error.min(core::f64::consts::FRAC_PI_2)) * cfg.heading_weight;
    let lateral_center = -center.distance.min(cfg.lateral_cap) * cfg.lateral_weight;

    let breakdown = RewardBreakdown::from_components(
        progress,
        cfg.collision_penalty(worst),
        route,
        drivable,
        heading_center,
        lateral_center,
    );
    Ok((breakdown, worst))
}

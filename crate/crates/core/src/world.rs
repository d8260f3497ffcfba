//! The search's internal environment: lane centerlines, route, drivable
//! area, static objects and timestamped agent tracks, plus the geometric
//! queries the reward is built from.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{OrientedBox, Point, Polygon};
use crate::kinematics::{EgoState, Pose};
use crate::math::{atan2, floor, hypot, round, wrap_angle};
use crate::TICK;

/// Traffic participant class; decides the collision penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AgentKind {
    Vehicle,
    Pedestrian,
    Object,
}

impl AgentKind {
    /// Vehicles and pedestrians outrank objects.
    pub fn is_severe(self) -> bool {
        matches!(self, AgentKind::Vehicle | AgentKind::Pedestrian)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
struct CenterlineRaw {
    id: String,
    points: Vec<Point>,
    speed_limit: f64,
    lane_width: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    blocked: bool,
}

/// Lane centerline polyline with cumulative arc-length.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "CenterlineRaw"))]
pub struct Centerline {
    pub id: String,
    points: Vec<Point>,
    pub speed_limit: f64,
    pub lane_width: f64,
    /// Scenario-level closure (e.g. red light); a blocked lane is off-route.
    pub blocked: bool,
    #[cfg_attr(feature = "serde", serde(skip))]
    cum_s: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    seg_heading: Vec<f64>,
}

impl TryFrom<CenterlineRaw> for Centerline {
    type Error = Error;

    fn try_from(raw: CenterlineRaw) -> Result<Self> {
        let mut c = Centerline::new(raw.id, raw.points, raw.speed_limit, raw.lane_width)?;
        c.blocked = raw.blocked;
        Ok(c)
    }
}

impl Centerline {
    pub fn new(id: impl Into<String>, points: Vec<Point>, speed_limit: f64, lane_width: f64) -> Result<Self> {
        let id = id.into();
        if points.len() < 2 {
            return Err(Error::malformed(alloc::format!("centerline {id}: needs at least 2 points")));
        }
        if !(speed_limit > 0.0 && lane_width > 0.0) {
            return Err(Error::malformed(alloc::format!(
                "centerline {id}: speed_limit and lane_width must be positive"
            )));
        }
        let mut cum_s = Vec::with_capacity(points.len());
        let mut seg_heading = Vec::with_capacity(points.len() - 1);
        cum_s.push(0.0);
        for w in points.windows(2) {
            let len = w[0].dist(w[1]);
            if !(len > 0.0) {
                return Err(Error::malformed(alloc::format!(
                    "centerline {id}: consecutive points must be distinct"
                )));
            }
            cum_s.push(cum_s[cum_s.len() - 1] + len);
            seg_heading.push(atan2(w[1].y - w[0].y, w[1].x - w[0].x));
        }
        Ok(Self {
            id,
            points,
            speed_limit,
            lane_width,
            blocked: false,
            cum_s,
            seg_heading,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.cum_s[self.cum_s.len() - 1]
    }

    /// Point and tangent heading at arc-length `s` (clamped to the ends).
    pub fn point_at(&self, s: f64) -> (Point, f64) {
        let s = s.clamp(0.0, self.length());
        let seg = match self.cum_s.iter().position(|&c| c > s) {
            Some(i) => i - 1,
            None => self.seg_heading.len() - 1,
        };
        let (a, b) = (self.points[seg], self.points[seg + 1]);
        let t = (s - self.cum_s[seg]) / (self.cum_s[seg + 1] - self.cum_s[seg]);
        (
            Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)),
            self.seg_heading[seg],
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
struct MapModelRaw {
    centerlines: Vec<Centerline>,
    drivable_area: Vec<Polygon>,
    route: Vec<String>,
}

/// Known map features.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "MapModelRaw"))]
pub struct MapModel {
    centerlines: Vec<Centerline>,
    drivable_area: Vec<Polygon>,
    route: Vec<String>,
    #[cfg_attr(feature = "serde", serde(skip))]
    route_idx: Vec<usize>,
    #[cfg_attr(feature = "serde", serde(skip))]
    route_offset: Vec<f64>,
}

impl TryFrom<MapModelRaw> for MapModel {
    type Error = Error;

    fn try_from(raw: MapModelRaw) -> Result<Self> {
        MapModel::new(raw.centerlines, raw.drivable_area, raw.route)
    }
}

impl MapModel {
    pub fn new(centerlines: Vec<Centerline>, drivable_area: Vec<Polygon>, route: Vec<String>) -> Result<Self> {
        for (i, c) in centerlines.iter().enumerate() {
            if centerlines[..i].iter().any(|o| o.id == c.id) {
                return Err(Error::malformed(alloc::format!("duplicate centerline id {}", c.id)));
            }
        }
        let mut route_idx = Vec::with_capacity(route.len());
        let mut route_offset = Vec::with_capacity(route.len());
        let mut acc = 0.0;
        for id in &route {
            let idx = centerlines
                .iter()
                .position(|c| &c.id == id)
                .ok_or_else(|| Error::malformed(alloc::format!("route references unknown centerline {id}")))?;
            route_idx.push(idx);
            route_offset.push(acc);
            acc += centerlines[idx].length();
        }
        Ok(Self {
            centerlines,
            drivable_area,
            route,
            route_idx,
            route_offset,
        })
    }

    pub fn centerlines(&self) -> &[Centerline] {
        &self.centerlines
    }

    pub fn centerlines_mut(&mut self) -> impl Iterator<Item = &mut Centerline> {
        self.centerlines.iter_mut()
    }

    pub fn drivable_area(&self) -> &[Polygon] {
        &self.drivable_area
    }

    pub fn route(&self) -> &[String] {
        &self.route
    }

    /// Route centerlines in driving order.
    pub fn route_centerlines(&self) -> impl Iterator<Item = &Centerline> + '_ {
        self.route_idx.iter().map(|&i| &self.centerlines[i])
    }

    pub fn route_length(&self) -> f64 {
        self.route_centerlines().map(Centerline::length).sum()
    }

    /// Point and heading at route arc-length `s`.
    pub fn route_point_at(&self, s: f64) -> Option<(Point, f64)> {
        let k = self.route_offset.iter().rposition(|&o| o <= s).unwrap_or(0);
        let c = &self.centerlines[*self.route_idx.get(k)?];
        Some(c.point_at(s - self.route_offset[k]))
    }

    /// Adds a drivable polygon.
    pub fn push_drivable(&mut self, polygon: Polygon) {
        self.drivable_area.push(polygon);
    }
}

/// Result of projecting a pose onto the closest centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// |wrap(ego heading - segment heading)|, in [0, pi].
    pub heading_error: f64,
    /// Unsigned lateral distance.
    pub distance: f64,
    /// Arc-length of the foot point; accumulated in route order for route
    /// projections.
    pub arc_length: f64,
    /// Index into [`MapModel::centerlines`].
    pub centerline: usize,
    pub speed_limit: f64,
    pub lane_width: f64,
    pub blocked: bool,
}

impl Projection {
    /// Within half a lane of an open centerline.
    pub fn on_route(&self) -> bool {
        !self.blocked && self.distance <= self.lane_width / 2.0
    }
}

/// Closest point over the candidate centerlines. Ties keep the earlier
/// candidate (map order, or route order when `route_only`).
pub fn project_to_centerline(pose: &Pose, map: &MapModel, route_only: bool) -> Result<Projection> {
    let p = Point::new(pose.x, pose.y);
    let mut best: Option<(f64, usize, usize, f64)> = None;
    let consider = |ci: usize, offset: f64, best: &mut Option<(f64, usize, usize, f64)>| {
        let c = &map.centerlines[ci];
        for seg in 0..c.seg_heading.len() {
            let (a, b) = (c.points[seg], c.points[seg + 1]);
            let (ex, ey) = (b.x - a.x, b.y - a.y);
            let len2 = ex * ex + ey * ey;
            let t = (((p.x - a.x) * ex + (p.y - a.y) * ey) / len2).clamp(0.0, 1.0);
            let d = hypot(a.x + t * ex - p.x, a.y + t * ey - p.y);
            if best.is_none_or(|(bd, ..)| d < bd) {
                let s = offset + c.cum_s[seg] + t * (c.cum_s[seg + 1] - c.cum_s[seg]);
                *best = Some((d, ci, seg, s));
            }
        }
    };
    if route_only {
        for (k, &ci) in map.route_idx.iter().enumerate() {
            consider(ci, map.route_offset[k], &mut best);
        }
    } else {
        for ci in 0..map.centerlines.len() {
            consider(ci, 0.0, &mut best);
        }
    }
    let (distance, ci, seg, arc_length) =
        best.ok_or_else(|| Error::config(if route_only { "map has no route centerlines" } else { "map has no centerlines" }))?;
    let c = &map.centerlines[ci];
    Ok(Projection {
        heading_error: wrap_angle(pose.heading - c.seg_heading[seg]).abs(),
        distance,
        arc_length,
        centerline: ci,
        speed_limit: c.speed_limit,
        lane_width: c.lane_width,
        blocked: c.blocked,
    })
}

/// All four footprint corners inside the union of drivable polygons.
pub fn footprint_in_drivable(footprint: &OrientedBox, map: &MapModel) -> bool {
    footprint
        .corners()
        .iter()
        .all(|&corner| map.drivable_area.iter().any(|poly| poly.contains(corner)))
}

/// Most severe overlapping kind: the first vehicle/pedestrian overlap wins,
/// otherwise any object overlap.
pub fn check_collision(ego: &OrientedBox, others: &[(OrientedBox, AgentKind)]) -> Option<AgentKind> {
    let mut hit = None;
    for (other, kind) in others {
        if ego.overlaps(other) {
            if kind.is_severe() {
                return Some(*kind);
            }
            hit.get_or_insert(*kind);
        }
    }
    hit
}

/// Agent trajectory sampled every [`TICK`] seconds from `t = 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct AgentTrack {
    pub id: String,
    pub kind: AgentKind,
    pub length: f64,
    pub width: f64,
    pub trajectory: Vec<Pose>,
}

impl AgentTrack {
    pub fn validate(&self) -> Result<()> {
        if self.trajectory.is_empty() {
            return Err(Error::malformed(alloc::format!("agent {}: empty trajectory", self.id)));
        }
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(Error::malformed(alloc::format!("agent {}: dimensions must be positive", self.id)));
        }
        Ok(())
    }

    pub fn pose_at(&self, t: f64) -> Pose {
        agent_pose_at(&self.trajectory, t)
    }

    pub fn footprint(&self, pose: &Pose) -> OrientedBox {
        OrientedBox::new(pose.x, pose.y, pose.heading, self.length, self.width)
    }

    /// Time covered by the samples.
    pub fn span(&self) -> f64 {
        (self.trajectory.len().saturating_sub(1)) as f64 * TICK
    }
}

/// Linear interpolation between the bracketing samples (shortest-arc
/// heading); queries past the end hold the final pose.
pub fn agent_pose_at(samples: &[Pose], t: f64) -> Pose {
    let last = samples.len() - 1;
    let f = (t / TICK).max(0.0);
    let r = round(f);
    if (f - r).abs() < 1e-9 {
        return samples[(r as usize).min(last)];
    }
    let i = floor(f) as usize;
    if i >= last {
        return samples[last];
    }
    let frac = f - i as f64;
    let (a, b) = (samples[i], samples[i + 1]);
    Pose::new(
        a.x + frac * (b.x - a.x),
        a.y + frac * (b.y - a.y),
        wrap_angle(a.heading + frac * wrap_angle(b.heading - a.heading)),
    )
}

/// An agent as seen at snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentObservation {
    pub id: String,
    pub kind: AgentKind,
    pub length: f64,
    pub width: f64,
    pub pose: Pose,
    /// Pose one tick earlier, when the track has it.
    pub previous: Option<Pose>,
}

impl AgentObservation {
    /// Observation of `track` at time `t`.
    pub fn from_track(track: &AgentTrack, t: f64) -> Self {
        let previous = (t >= TICK - 1e-9).then(|| track.pose_at(t - TICK));
        Self {
            id: track.id.clone(),
            kind: track.kind,
            length: track.length,
            width: track.width,
            pose: track.pose_at(t),
            previous,
        }
    }
}

/// Root context of one search.
#[derive(Debug, Clone)]
pub struct WorldSnapshot<'a> {
    pub time: f64,
    pub ego: EgoState,
    pub agents: Vec<AgentObservation>,
    pub statics: Vec<OrientedBox>,
    pub map: &'a MapModel,
}

struct TimedBox {
    bbox: OrientedBox,
    kind: AgentKind,
}

/// Obstacles laid out on the tick grid of one search: static boxes plus
/// every predicted agent footprint per tick.
pub struct ObstacleField {
    statics: Vec<TimedBox>,
    per_tick: Vec<Vec<TimedBox>>,
    dt: f64,
}

impl ObstacleField {
    /// `agents` yields (kind, length, width, poses) where poses are sampled
    /// every `dt` seconds from the snapshot time, for `ticks` ticks.
    pub fn new<'p, I>(statics: &[OrientedBox], agents: I, dt: f64, ticks: usize) -> Self
    where
        I: IntoIterator<Item = (AgentKind, f64, f64, &'p [Pose])>,
    {
        let mut per_tick: Vec<Vec<TimedBox>> = (0..=ticks).map(|_| Vec::new()).collect();
        for (kind, length, width, poses) in agents {
            if poses.is_empty() {
                continue;
            }
            for (k, slot) in per_tick.iter_mut().enumerate() {
                let p = agent_pose_at(poses, k as f64 * dt);
                slot.push(TimedBox {
                    bbox: OrientedBox::new(p.x, p.y, p.heading, length, width),
                    kind,
                });
            }
        }
        Self {
            statics: statics
                .iter()
                .map(|b| TimedBox {
                    bbox: *b,
                    kind: AgentKind::Object,
                })
                .collect(),
            per_tick,
            dt,
        }
    }

    pub fn tick_of(&self, t: f64) -> usize {
        let k = round(t / self.dt).max(0.0) as usize;
        k.min(self.per_tick.len() - 1)
    }

    /// Most severe collision of `ego` at time `t` (relative to the snapshot).
    pub fn collision_at(&self, ego: &OrientedBox, t: f64) -> Option<AgentKind> {
        let mut hit = None;
        for b in &self.per_tick[self.tick_of(t)] {
            if ego.overlaps(&b.bbox) {
                if b.kind.is_severe() {
                    return Some(b.kind);
                }
                hit = Some(b.kind);
            }
        }
        if hit.is_none() && self.statics.iter().any(|b| ego.overlaps(&b.bbox)) {
            hit = Some(AgentKind::Object);
        }
        hit
    }

    /// Agent boxes at `t`, for inspection.
    pub fn boxes_at(&self, t: f64) -> impl Iterator<Item = (OrientedBox, AgentKind)> + '_ {
        self.per_tick[self.tick_of(t)].iter().map(|b| (b.bbox, b.kind))
    }
}

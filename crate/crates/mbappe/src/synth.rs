//! Deterministic synthetic scenario families.
//!
//! Every family builds its road along +x from the origin, places the ego
//! rear axle at `(0, 0)` heading east, and scripts the other agents as fixed
//! tracks. Unspecified parameters are drawn from a seeded generator so a
//! (family, params, seed) triple always yields the same scenario.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use mbappe_core::{
    AgentKind, AgentTrack, Centerline, EgoState, MapModel, Point, Polygon, Pose, VehicleParams, TICK,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{EgoInit, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Straight,
    RightTurn,
    StoppedLeadVehicle,
    CrossingPedestrian,
    IntersectionPass,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Straight,
        Family::RightTurn,
        Family::StoppedLeadVehicle,
        Family::CrossingPedestrian,
        Family::IntersectionPass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Straight => "straight",
            Family::RightTurn => "right_turn",
            Family::StoppedLeadVehicle => "stopped_lead_vehicle",
            Family::CrossingPedestrian => "crossing_pedestrian",
            Family::IntersectionPass => "intersection_pass",
        }
    }

    fn salt(self) -> u64 {
        (Family::ALL.iter().position(|f| *f == self).unwrap() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario family {s:?}")))
    }
}

/// Family parameters. `None` fields are drawn from the seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    /// m/s
    pub speed_limit: Option<f64>,
    /// Ego start speed, m/s.
    pub init_speed: Option<f64>,
    pub duration: Option<f64>,
    /// Minimum route length, m.
    pub length: Option<f64>,
    /// Lead vehicle: initial bumper-to-bumper gap, m.
    pub gap: Option<f64>,
    /// Pedestrian / crossing vehicle: distance from the ego to the crossing, m.
    pub crossing_distance: Option<f64>,
    /// Time at which the crossing agent is on the ego's lane center, s.
    pub crossing_time: Option<f64>,
    /// Right turn radius, m.
    pub turn_radius: Option<f64>,
}

const LANE_WIDTH: f64 = 4.0;
const ROAD_HALF_WIDTH: f64 = 5.0;
/// Extra simulated time the tracks cover beyond the episode, so predictions
/// near the end of an episode stay on the scripted motion.
const TRACK_TAIL: f64 = 10.0;

struct Draw {
    rng: ChaCha8Rng,
}

impl Draw {
    fn or(&mut self, value: Option<f64>, lo: f64, hi: f64) -> f64 {
        // Always advance the generator so later draws do not depend on which
        // fields were given.
        let sample = self.rng.random_range(lo..=hi);
        value.unwrap_or(sample)
    }
}

/// Builds one scenario of `family`.
pub fn generate_scenario(family: Family, params: &ScenarioParams, seed: u64) -> Result<Scenario> {
    let mut draw = Draw {
        rng: ChaCha8Rng::seed_from_u64(seed ^ family.salt()),
    };
    let limit = draw.or(params.speed_limit, 6.0, 9.0);
    // the empty-road family starts cruising at the limit
    let low = if family == Family::Straight { 1.0 } else { 0.8 };
    let init_speed = draw.or(params.init_speed, low * limit, limit);
    let default_duration = match family {
        Family::Straight => 10.0,
        Family::StoppedLeadVehicle => 25.0,
        _ => 15.0,
    };
    let duration = params.duration.unwrap_or(default_duration);
    if !(limit > 0.0 && init_speed >= 0.0 && duration > 0.0) {
        return Err(Error::Config("speed_limit, init_speed and duration must be positive".into()));
    }
    let horizon = duration + TRACK_TAIL;
    let min_len = draw.or(params.length, 0.0, 0.0).max(limit * horizon + 30.0);
    let ego_params = VehicleParams::default();
    let ego = EgoState::new(0.0, 0.0, 0.0, init_speed);
    let id = format!("{}_{seed:03}", family.name());

    let mut builder = Builder {
        limit,
        horizon,
        ego_params,
        agents: Vec::new(),
        zones: Vec::new(),
    };

    let map = match family {
        Family::Straight => straight_map(min_len, limit)?,
        Family::RightTurn => {
            let radius = draw.or(params.turn_radius, 18.0, 26.0);
            right_turn_map(radius, min_len, limit)?
        }
        Family::StoppedLeadVehicle => {
            let gap = draw.or(params.gap, 25.0, 35.0);
            builder.stopped_lead(gap, init_speed);
            straight_map(min_len, limit)?
        }
        Family::CrossingPedestrian => {
            let dist = draw.or(params.crossing_distance, 30.0, 40.0);
            let nominal = dist / init_speed.max(1.0);
            let t_cross = draw.or(params.crossing_time, nominal - 1.5, nominal + 1.5);
            builder.crossing_pedestrian(dist, t_cross);
            straight_map(min_len, limit)?
        }
        Family::IntersectionPass => {
            let dist = draw.or(params.crossing_distance, 35.0, 45.0);
            let nominal = dist / init_speed.max(1.0);
            let t_cross = draw.or(params.crossing_time, nominal - 2.0, nominal + 2.0);
            let map = intersection_map(dist, min_len, limit)?;
            builder.crossing_vehicle(dist, t_cross);
            map
        }
    };

    let expert = builder.expert(&map, ego, duration);
    let scenario = Scenario {
        id,
        map,
        ego_init: EgoInit {
            state: ego,
            params: ego_params,
        },
        agents: builder.agents,
        statics: Vec::new(),
        duration,
        tick: TICK,
        expert: Some(expert),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// `n` scenarios cycling through every family with seeds `0, 1, ...` per
/// family; ids are unique.
pub fn builtin_suite(n: usize) -> Result<Vec<Scenario>> {
    (0..n)
        .map(|i| {
            let family = Family::ALL[i % Family::ALL.len()];
            generate_scenario(family, &ScenarioParams::default(), (i / Family::ALL.len()) as u64)
        })
        .collect()
}

fn straight_map(length: f64, limit: f64) -> Result<MapModel> {
    let lane = Centerline::new("lane", vec![Point::new(-20.0, 0.0), Point::new(length, 0.0)], limit, LANE_WIDTH)?;
    let road = Polygon::rectangle(-30.0, -ROAD_HALF_WIDTH, length + 10.0, ROAD_HALF_WIDTH)?;
    Ok(MapModel::new(vec![lane], vec![road], vec!["lane".into()])?)
}

fn right_turn_map(radius: f64, min_len: f64, limit: f64) -> Result<MapModel> {
    let approach = 15.0;
    let mut pts = vec![Point::new(-20.0, 0.0), Point::new(approach, 0.0)];
    let n_arc = (radius * FRAC_PI_2).ceil() as usize;
    for k in 1..=n_arc {
        let phi = FRAC_PI_2 * k as f64 / n_arc as f64;
        pts.push(Point::new(approach + radius * phi.sin(), -radius + radius * phi.cos()));
    }
    let exit = (min_len - approach - 20.0 - radius * FRAC_PI_2).max(30.0);
    pts.push(Point::new(approach + radius, -radius - exit));
    let lane = Centerline::new("lane", pts.clone(), limit, LANE_WIDTH)?;
    let mut extended = pts;
    extended[0] = Point::new(-30.0, 0.0);
    let last = extended.len() - 1;
    extended[last].y -= 10.0;
    let road = corridor(&extended, ROAD_HALF_WIDTH)?;
    Ok(MapModel::new(vec![lane], vec![road], vec!["lane".into()])?)
}

fn intersection_map(dist: f64, length: f64, limit: f64) -> Result<MapModel> {
    let lane = Centerline::new("lane", vec![Point::new(-20.0, 0.0), Point::new(length, 0.0)], limit, LANE_WIDTH)?;
    let cross = Centerline::new("cross", vec![Point::new(dist, 60.0), Point::new(dist, -60.0)], limit, LANE_WIDTH)?;
    let main_road = Polygon::rectangle(-30.0, -ROAD_HALF_WIDTH, length + 10.0, ROAD_HALF_WIDTH)?;
    let cross_road = Polygon::rectangle(dist - ROAD_HALF_WIDTH, -70.0, dist + ROAD_HALF_WIDTH, 70.0)?;
    Ok(MapModel::new(vec![lane, cross], vec![main_road, cross_road], vec!["lane".into()])?)
}

/// Polygon covering `half_width` on each side of a polyline.
fn corridor(pts: &[Point], half_width: f64) -> Result<Polygon> {
    let normal = |i: usize| {
        let (a, b) = if i + 1 < pts.len() { (pts[i], pts[i + 1]) } else { (pts[i - 1], pts[i]) };
        let len = a.dist(b);
        ((a.y - b.y) / len, (b.x - a.x) / len)
    };
    let mut left = Vec::with_capacity(pts.len());
    let mut right = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        // average the normals of adjacent segments at interior vertices
        let (mut nx, mut ny) = normal(i);
        if i > 0 && i + 1 < pts.len() {
            let (px, py) = normal(i - 1);
            let (sx, sy) = (nx + px, ny + py);
            let norm = (sx * sx + sy * sy).sqrt();
            let cos_half = norm / 2.0;
            nx = sx / norm / cos_half;
            ny = sy / norm / cos_half;
        }
        left.push(Point::new(p.x + half_width * nx, p.y + half_width * ny));
        right.push(Point::new(p.x - half_width * nx, p.y - half_width * ny));
    }
    right.reverse();
    left.extend(right);
    Ok(Polygon::new(left)?)
}

/// Interval of route arc-length the ego body must not occupy during a time
/// window.
struct ConflictZone {
    s_from: f64,
    s_to: f64,
    t_from: f64,
    t_to: f64,
}

struct Builder {
    limit: f64,
    horizon: f64,
    ego_params: VehicleParams,
    agents: Vec<AgentTrack>,
    zones: Vec<ConflictZone>,
}

impl Builder {
    fn samples(&self) -> usize {
        (self.horizon / TICK).round() as usize + 1
    }

    fn front_offset(&self) -> f64 {
        self.ego_params.length - self.ego_params.rear_overhang
    }

    fn stopped_lead(&mut self, gap: f64, v0: f64) {
        let (length, width) = (4.5, 2.0);
        let stop_time = 3.0;
        let rear0 = self.front_offset() + gap;
        let trajectory = (0..self.samples())
            .map(|k| {
                let t = (k as f64 * TICK).min(stop_time);
                let x = rear0 + length / 2.0 + v0 * t - v0 * t * t / (2.0 * stop_time);
                Pose::new(x, 0.0, 0.0)
            })
            .collect::<Vec<_>>();
        let rest_rear = trajectory.last().unwrap().x - length / 2.0;
        self.zones.push(ConflictZone {
            s_from: rest_rear - 2.5,
            s_to: f64::INFINITY,
            t_from: 0.0,
            t_to: f64::INFINITY,
        });
        self.agents.push(AgentTrack {
            id: "lead".into(),
            kind: AgentKind::Vehicle,
            length,
            width,
            trajectory,
        });
    }

    fn crossing_pedestrian(&mut self, dist: f64, t_cross: f64) {
        let speed = 1.3;
        let half_span = ROAD_HALF_WIDTH + 1.5;
        let x = self.front_offset() + dist;
        let trajectory = (0..self.samples())
            .map(|k| {
                let t = k as f64 * TICK;
                let y = (speed * (t - t_cross)).clamp(-half_span, half_span);
                Pose::new(x, y, FRAC_PI_2)
            })
            .collect();
        // on the ego's swept band |y| < 2 during this window
        let band = 2.0;
        self.zones.push(ConflictZone {
            s_from: x - 1.0,
            s_to: x + 1.0,
            t_from: t_cross - band / speed,
            t_to: t_cross + band / speed,
        });
        self.agents.push(AgentTrack {
            id: "pedestrian".into(),
            kind: AgentKind::Pedestrian,
            length: 0.6,
            width: 0.6,
            trajectory,
        });
    }

    fn crossing_vehicle(&mut self, dist: f64, t_cross: f64) {
        let speed = 6.0;
        let (length, width) = (4.5, 2.0);
        let trajectory = (0..self.samples())
            .map(|k| {
                let t = k as f64 * TICK;
                Pose::new(dist, speed * (t_cross - t), -FRAC_PI_2)
            })
            .collect();
        let band = ROAD_HALF_WIDTH + length / 2.0;
        self.zones.push(ConflictZone {
            s_from: dist - ROAD_HALF_WIDTH - 1.0,
            s_to: dist + ROAD_HALF_WIDTH + 1.0,
            t_from: t_cross - band / speed,
            t_to: t_cross + band / speed,
        });
        self.agents.push(AgentTrack {
            id: "crossing".into(),
            kind: AgentKind::Vehicle,
            length,
            width,
            trajectory,
        });
    }

    /// Expert ego trajectory: follows the route centerline, accelerating
    /// toward the limit and yielding to every conflict zone it cannot clear
    /// before the zone becomes occupied.
    fn expert(&self, map: &MapModel, ego: EgoState, duration: f64) -> Vec<Pose> {
        let (accel, brake): (f64, f64) = (1.0, 3.0);
        let front = self.front_offset();
        let rear = self.ego_params.rear_overhang;
        let n = ((duration + TRACK_TAIL) / TICK).round() as usize + 1;
        let s0 = mbappe_core::project_to_centerline(&ego.pose(), map, true).map_or(0.0, |p| p.arc_length);
        let mut s = s0;
        let mut v = ego.velocity;
        let mut poses = Vec::with_capacity(n);
        for k in 0..n {
            let t = k as f64 * TICK;
            let (p, h) = map.route_point_at(s).unwrap_or((Point::new(ego.x, ego.y), ego.heading));
            poses.push(Pose::new(p.x, p.y, h));

            // front-to-zone distances for zones the ego must wait for
            let mut stop_at: Option<f64> = None;
            for z in &self.zones {
                let to_zone = z.s_from - (s + front);
                if to_zone < -0.5 || t > z.t_to {
                    continue;
                }
                let v_pass = v.max(0.5 * self.limit);
                let clear_time = t + (z.s_to - (s - rear)).max(0.0) / v_pass;
                let clears_before = z.s_to.is_finite() && clear_time < z.t_from - 0.5;
                if !clears_before {
                    let d = to_zone - 1.0;
                    stop_at = Some(stop_at.map_or(d, |o: f64| o.min(d)));
                }
            }
            let mut a = if v < self.limit { accel.min((self.limit - v) / TICK) } else { 0.0 };
            if let Some(d) = stop_at {
                if d <= 0.0 {
                    a = -brake;
                } else {
                    let needed = v * v / (2.0 * d);
                    if needed > 0.5 * brake {
                        a = -needed.min(brake);
                    } else if v * v / (2.0 * brake) + v * TICK >= d {
                        a = -brake;
                    } else {
                        a = a.min(0.0);
                    }
                }
            }
            s += v * TICK;
            v = (v + a * TICK).max(0.0);
        }
        poses
    }
}

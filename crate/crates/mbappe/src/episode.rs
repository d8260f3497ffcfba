//! Closed-loop episodes against replayed agents.
//!
//! The ego replans every `replan_every` ticks and executes the current plan
//! at 0.1 s resolution in between. Agents follow their scenario tracks no
//! matter what the ego does.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mbappe_core::{
    evaluate_node, extract_plan, footprint_in_drivable, integrate, project_to_centerline, run_search,
    Action, ActionGrid, AgentKind, EgoState, GridIndex, ObstacleField, RewardBreakdown, RewardConfig,
    SearchConfig, Substep, TICK,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::TreeExport;
use crate::predict::PredictorKind;
use crate::scenario::Scenario;

/// Everything besides the scenario and seed that shapes an episode.
#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    /// Search parameters, including the ablation switches.
    pub search: SearchConfig,
    pub reward: RewardConfig,
    pub predictor: PredictorKind,
    /// Ticks between replans (>= 1).
    pub replan_every: u32,
    /// Keep the full search tree of every planning step in the log.
    pub capture_trees: bool,
    /// Perturb the ego start state from the seed.
    pub jitter: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            reward: RewardConfig::default(),
            predictor: PredictorKind::Scripted,
            replan_every: 5,
            capture_trees: false,
            jitter: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Infractions {
    pub collision: Option<AgentKind>,
    pub off_drivable: bool,
    pub off_route: bool,
}

impl Infractions {
    pub fn any(&self) -> bool {
        self.collision.is_some() || self.off_drivable || self.off_route
    }
}

/// State after executing one 0.1 s tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: usize,
    /// End of the tick, seconds.
    pub time: f64,
    pub state: EgoState,
    pub action: Action,
    pub action_index: GridIndex,
    /// Reward of this tick, evaluated like a one-step node.
    pub reward: RewardBreakdown,
    pub route_s: f64,
    pub infractions: Infractions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootChild {
    pub action: GridIndex,
    pub accel: f64,
    pub steer: f64,
    pub q: f64,
    pub n: u32,
    pub p: f64,
}

/// One planning step: the root child table and the chosen plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningSummary {
    pub tick: usize,
    pub time: f64,
    pub root: EgoState,
    pub anchor: Option<GridIndex>,
    pub children: Vec<RootChild>,
    pub plan: Vec<GridIndex>,
    pub simulations: u32,
    pub nodes: usize,
    pub max_depth: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeExport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EpisodeStatus {
    Completed,
    Collision { tick: usize, kind: AgentKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeHeader {
    pub scenario_id: String,
    pub seed: u64,
    pub predictor: String,
    pub ablation: String,
    pub replan_every: u32,
    pub node_duration: f64,
    pub duration: f64,
    pub initial_state: EgoState,
    pub route_s0: f64,
    /// Route length reachable at the speed limit within the duration.
    pub available_progress: f64,
    pub status: EpisodeStatus,
    pub first_collision: Option<usize>,
    pub first_off_drivable: Option<usize>,
    pub first_off_route: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub header: EpisodeHeader,
    pub ticks: Vec<TickRecord>,
    pub planning: Vec<PlanningSummary>,
    /// Wall-clock time spent in search; never serialized so logs stay
    /// reproducible.
    #[serde(skip)]
    pub search_time: Duration,
}

impl EpisodeLog {
    pub fn collided(&self) -> bool {
        self.header.first_collision.is_some()
    }

    /// Route progress over the available progress, clamped to [0, 1].
    pub fn progress_ratio(&self) -> f64 {
        let end = self.ticks.last().map_or(self.header.route_s0, |t| t.route_s);
        if self.header.available_progress <= 0.0 {
            return 1.0;
        }
        ((end - self.header.route_s0) / self.header.available_progress).clamp(0.0, 1.0)
    }

    pub fn mean_search_ms(&self) -> f64 {
        if self.planning.is_empty() {
            0.0
        } else {
            self.search_time.as_secs_f64() * 1e3 / self.planning.len() as f64
        }
    }

    /// Writes `<stem>.ndjson` (header line, then one line per tick) and the
    /// `<stem>.search.ndjson` sidecar (one line per planning step).
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let log_path = dir.join(format!("{stem}.ndjson"));
        let side_path = dir.join(format!("{stem}.search.ndjson"));
        write_lines(&log_path, std::iter::once(to_line(&self.header)).chain(self.ticks.iter().map(to_line)))?;
        write_lines(&side_path, self.planning.iter().map(to_line))?;
        Ok((log_path, side_path))
    }

    /// Reads a log written by [`EpisodeLog::write`]. The sidecar is
    /// optional.
    pub fn read(log_path: &Path, sidecar: Option<&Path>) -> Result<Self> {
        let mut lines = read_lines(log_path)?.into_iter();
        let (n0, first) = lines
            .next()
            .ok_or_else(|| Error::Input(format!("{}: empty episode log", log_path.display())))?;
        let header: EpisodeHeader = parse_line(log_path, n0, &first)?;
        let ticks = lines.map(|(n, l)| parse_line(log_path, n, &l)).collect::<Result<_>>()?;
        let planning = match sidecar {
            Some(p) => read_lines(p)?.into_iter().map(|(n, l)| parse_line(p, n, &l)).collect::<Result<_>>()?,
            None => Vec::new(),
        };
        Ok(Self {
            header,
            ticks,
            planning,
            search_time: Duration::ZERO,
        })
    }
}

fn to_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("log records serialize")
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::write(path, e))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}").map_err(|e| Error::write(path, e))?;
    }
    w.flush().map_err(|e| Error::write(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::read(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::read(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn parse_line<T: for<'de> Deserialize<'de>>(path: &Path, n: usize, line: &str) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::Input(format!("{}:{n}: {e}", path.display())))
}

/// Seeded perturbation of the start state: speed, lateral offset and
/// heading. Falls back to the unperturbed state if the result would leave
/// the drivable area.
pub fn jitter_start(scenario: &Scenario, seed: u64) -> EgoState {
    let base = scenario.ego_init.state;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dv: f64 = rng.random_range(-0.5..=0.5);
    let dl: f64 = rng.random_range(-0.25..=0.25);
    let dh: f64 = rng.random_range(-0.02..=0.02);
    let (s, c) = base.heading.sin_cos();
    let state = EgoState::new(
        base.x - dl * s,
        base.y + dl * c,
        base.heading + dh,
        (base.velocity + dv).max(0.0),
    );
    if footprint_in_drivable(&scenario.ego_init.params.footprint(&state), &scenario.map) {
        state
    } else {
        base
    }
}

/// Runs one closed-loop episode.
pub fn run_episode(scenario: &Scenario, cfg: &EpisodeConfig, seed: u64) -> Result<EpisodeLog> {
    scenario.validate()?;
    if cfg.replan_every < 1 {
        return Err(Error::Config("replan_every must be >= 1".into()));
    }
    let mut search_cfg = cfg.search;
    search_cfg.rng_seed = seed;
    search_cfg.validate()?;
    cfg.reward.validate()?;

    let params = scenario.ego_init.params;
    let grid = ActionGrid::default();
    let n_ticks = scenario.n_ticks();
    let predictor = cfg.predictor.build(scenario);
    let horizon = search_cfg.horizon();
    let per_node = search_cfg.substeps_per_node();

    // ground truth for infraction checks, on the episode clock
    let truth = ObstacleField::new(
        &scenario.statics,
        scenario.agents.iter().map(|a| (a.kind, a.length, a.width, a.trajectory.as_slice())),
        TICK,
        n_ticks,
    );
    let reward_ctx = mbappe_core::reward::RewardContext {
        map: &scenario.map,
        obstacles: &truth,
        cfg: &cfg.reward,
        params: &params,
    };

    let mut ego = if cfg.jitter { jitter_start(scenario, seed) } else { scenario.ego_init.state };
    let start = project_to_centerline(&ego.pose(), &scenario.map, true)?;
    let available =
        (start.speed_limit * scenario.duration).min((scenario.map.route_length() - start.arc_length).max(0.0));
    let mut header = EpisodeHeader {
        scenario_id: scenario.id.clone(),
        seed,
        predictor: cfg.predictor.name().into(),
        ablation: search_cfg.ablation.label(),
        replan_every: cfg.replan_every,
        node_duration: search_cfg.node_duration,
        duration: scenario.duration,
        initial_state: ego,
        route_s0: start.arc_length,
        available_progress: available,
        status: EpisodeStatus::Completed,
        first_collision: None,
        first_off_drivable: None,
        first_off_route: None,
    };

    let mut ticks = Vec::with_capacity(n_ticks);
    let mut planning = Vec::new();
    let mut search_time = Duration::ZERO;
    let mut queue: Vec<GridIndex> = Vec::new();
    let mut cursor = 0usize;
    let mut prev_executed: Option<GridIndex> = None;

    for k in 0..n_ticks {
        let t = k as f64 * TICK;
        if k % cfg.replan_every as usize == 0 || cursor >= queue.len() {
            let fail = |e: Error| Error::Episode {
                context: format!("{} seed {seed} tick {k}", scenario.id),
                source: Box::new(e),
            };
            let snapshot = scenario.snapshot(t, ego);
            let predictions = predictor.predict(&snapshot, horizon).map_err(|e| fail(e.into()))?;
            let started = Instant::now();
            let outcome = run_search(&snapshot, &predictions, prev_executed, &search_cfg, &cfg.reward, &params)
                .map_err(|e| fail(e.into()))?;
            let plan = extract_plan(&outcome.tree).map_err(|e| fail(e.into()))?;
            search_time += started.elapsed();

            let root = outcome.tree.root();
            planning.push(PlanningSummary {
                tick: k,
                time: t,
                root: root.state,
                anchor: outcome.tree.root_anchor,
                children: root
                    .edges
                    .iter()
                    .map(|e| {
                        let a = grid.action(e.action);
                        RootChild {
                            action: e.action,
                            accel: a.accel,
                            steer: a.steer,
                            q: e.stats.q,
                            n: e.stats.n,
                            p: e.stats.p,
                        }
                    })
                    .collect(),
                plan: plan.clone(),
                simulations: outcome.stats.simulations,
                nodes: outcome.stats.nodes,
                max_depth: outcome.stats.max_depth,
                tree: cfg.capture_trees.then(|| TreeExport::from_tree(&outcome.tree, &plan)),
            });
            queue = plan.iter().flat_map(|a| std::iter::repeat_n(*a, per_node)).collect();
            if queue.is_empty() {
                // nothing was visited: keep doing what we did
                queue.push(prev_executed.unwrap_or(GridIndex::CENTER));
            }
            cursor = 0;
        }

        let idx = queue[cursor];
        cursor += 1;
        let action = grid.action(idx);
        let next = integrate(&ego, action, TICK, &params);
        let t1 = (k + 1) as f64 * TICK;

        let footprint = params.footprint(&next);
        let route = project_to_centerline(&next.pose(), &scenario.map, true)?;
        let infractions = Infractions {
            collision: truth.collision_at(&footprint, t1),
            off_drivable: !footprint_in_drivable(&footprint, &scenario.map),
            off_route: !route.on_route(),
        };
        let reward = evaluate_node(&ego, &[Substep { time: t1, state: next }], t1, &reward_ctx)?;
        if infractions.collision.is_some() {
            header.first_collision.get_or_insert(k);
        }
        if infractions.off_drivable {
            header.first_off_drivable.get_or_insert(k);
        }
        if infractions.off_route {
            header.first_off_route.get_or_insert(k);
        }
        ticks.push(TickRecord {
            tick: k,
            time: t1,
            state: next,
            action,
            action_index: idx,
            reward,
            route_s: route.arc_length,
            infractions,
        });
        ego = next;
        prev_executed = Some(idx);

        if let Some(kind) = infractions.collision.filter(|c| c.is_severe()) {
            header.status = EpisodeStatus::Collision { tick: k, kind };
            break;
        }
    }

    Ok(EpisodeLog {
        header,
        ticks,
        planning,
        search_time,
    })
}

/// Runs a single search from the scenario start and returns its tree.
pub fn plan_once(scenario: &Scenario, cfg: &EpisodeConfig, seed: u64) -> Result<TreeExport> {
    scenario.validate()?;
    let mut search_cfg = cfg.search;
    search_cfg.rng_seed = seed;
    let ego = if cfg.jitter { jitter_start(scenario, seed) } else { scenario.ego_init.state };
    let snapshot = scenario.snapshot(0.0, ego);
    let predictions = cfg.predictor.build(scenario).predict(&snapshot, search_cfg.horizon())?;
    let params = scenario.ego_init.params;
    let outcome = run_search(&snapshot, &predictions, None, &search_cfg, &cfg.reward, &params)?;
    let plan = extract_plan(&outcome.tree)?;
    Ok(TreeExport::from_tree(&outcome.tree, &plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_scenario, Family, ScenarioParams};

    fn quick() -> EpisodeConfig {
        let mut cfg = EpisodeConfig::default();
        cfg.search.n_simulations = 64;
        cfg
    }

    #[test]
    fn record_count_matches_duration() {
        let p = ScenarioParams {
            duration: Some(3.0),
            ..Default::default()
        };
        let s = generate_scenario(Family::Straight, &p, 0).unwrap();
        let log = run_episode(&s, &quick(), 0).unwrap();
        assert_eq!(log.ticks.len(), 30);
        assert_eq!(log.planning.len(), 6);
        assert_eq!(log.header.status, EpisodeStatus::Completed);
    }

    #[test]
    fn executed_states_follow_the_plan() {
        let p = ScenarioParams {
            duration: Some(2.0),
            ..Default::default()
        };
        let s = generate_scenario(Family::RightTurn, &p, 1).unwrap();
        let mut cfg = quick();
        cfg.replan_every = 10;
        let log = run_episode(&s, &cfg, 1).unwrap();
        let grid = ActionGrid::default();
        let plan = &log.planning[0].plan;
        let mut state = log.header.initial_state;
        for rec in &log.ticks[..10] {
            assert_eq!(rec.action_index, plan[0]);
            state = integrate(&state, grid.action(plan[0]), TICK, &s.ego_init.params);
            assert_eq!(rec.state, state);
        }
    }

    #[test]
    fn logs_round_trip_through_ndjson() {
        let p = ScenarioParams {
            duration: Some(1.0),
            ..Default::default()
        };
        let s = generate_scenario(Family::CrossingPedestrian, &p, 2).unwrap();
        let log = run_episode(&s, &quick(), 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = log.write(dir.path(), "ep").unwrap();
        let back = EpisodeLog::read(&a, Some(&b)).unwrap();
        assert_eq!(back, EpisodeLog { search_time: Duration::ZERO, ..log });
    }

    #[test]
    fn zero_replan_interval_is_rejected() {
        let s = generate_scenario(Family::Straight, &ScenarioParams::default(), 0).unwrap();
        let cfg = EpisodeConfig {
            replan_every: 0,
            ..quick()
        };
        assert_eq!(run_episode(&s, &cfg, 0).unwrap_err().exit_code(), 2);
    }
}

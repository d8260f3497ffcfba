use alloc::vec::Vec;

use super::prior::{compute_prior, window_actions, window_radius};
use super::tree::{backup, select_child, Node, NodeId, SearchTree, SimulationPath};
use super::SearchConfig;
use crate::error::{Error, Result};
use crate::kinematics::{rollout, ActionGrid, GridIndex, VehicleParams};
use crate::predictor::{ego_prior_actions, PredictionSet};
use crate::reward::{evaluate_from, RewardConfig, RewardContext, Substep};
use crate::world::{project_to_centerline, ObstacleField, WorldSnapshot};

/// Everything an expansion needs besides the tree.
pub struct ExpansionContext<'a> {
    pub grid: &'a ActionGrid,
    pub cfg: &'a SearchConfig,
    pub reward: RewardContext<'a>,
    /// Predictor-derived action per depth (learned prior centers).
    pub learned: &'a [GridIndex],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub simulations: u32,
    pub expansions: u32,
    pub nodes: usize,
    pub max_depth: u32,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub tree: SearchTree,
    pub stats: SearchStats,
    /// Learned-prior centers used at each depth.
    pub learned_actions: Vec<GridIndex>,
}

/// Expands `leaf`: every action of its continuity window is rolled out for
/// one node duration and scored. Children that crash into a vehicle or
/// pedestrian, or that reach `max_depth`, are terminal. A leaf already at
/// `max_depth` is only marked terminal.
pub fn expand(tree: &mut SearchTree, leaf: NodeId, ctx: &ExpansionContext<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let node = tree.node(leaf);
    if node.expanded {
        return Err(Error::internal("node is already expanded"));
    }
    if node.terminal {
        return Err(Error::internal("cannot expand a terminal node"));
    }
    if node.depth >= cfg.max_depth {
        tree.node_mut(leaf).terminal = true;
        return Ok(());
    }
    let is_root = node.parent.is_none();
    let (center, constrained) = if is_root {
        (tree.root_anchor, cfg.ablation.use_tree_constraint)
    } else {
        (node.incoming_action, cfg.ablation.use_node_constraint)
    };
    let radius = if constrained {
        window_radius(ctx.grid, cfg)
    } else {
        (12, 12)
    };
    let candidates = window_actions(center.unwrap_or(GridIndex::CENTER), radius);
    let learned = ctx.learned.get(node.depth as usize).copied();
    let priors = compute_prior(&candidates, node.depth, learned, cfg)?;

    let parent_state = node.state;
    let parent_time = node.time;
    let parent_s = node.route_s;
    let depth = node.depth + 1;
    let n_sub = cfg.substeps_per_node();
    let node_time = parent_time + n_sub as f64 * cfg.sub_dt;

    let mut substeps = Vec::with_capacity(n_sub);
    for (&action, p) in candidates.iter().zip(priors) {
        let states = rollout(&parent_state, ctx.grid.action(action), n_sub, cfg.sub_dt, ctx.reward.params);
        substeps.clear();
        substeps.extend(states.iter().enumerate().map(|(k, &state)| Substep {
            time: parent_time + (k + 1) as f64 * cfg.sub_dt,
            state,
        }));
        let (reward, hit) = evaluate_from(parent_s, &substeps, node_time, &ctx.reward)?;
        let end = states[n_sub - 1];
        let route_s = project_to_centerline(&end.pose(), ctx.reward.map, true)?.arc_length;
        let child = Node {
            state: end,
            depth,
            time: node_time,
            incoming_action: Some(action),
            reward: Some(reward),
            terminal: hit.is_some_and(|k| k.is_severe()) || depth >= cfg.max_depth,
            expanded: false,
            edges: Vec::new(),
            parent: None,
            route_s,
        };
        tree.add_child(leaf, action, p, child);
    }
    tree.node_mut(leaf).expanded = true;
    Ok(())
}

fn child_reward(tree: &SearchTree, node: NodeId, edge: usize) -> f64 {
    let child = tree.node(node).edges[edge].child;
    tree.node(child).reward.map_or(0.0, |r| r.total)
}

/// Runs `cfg.n_simulations` select/expand/evaluate/backup passes from the
/// snapshot. The root window is centered on `prev_executed`.
pub fn run_search(
    snapshot: &WorldSnapshot<'_>,
    predictions: &PredictionSet,
    prev_executed: Option<GridIndex>,
    cfg: &SearchConfig,
    reward_cfg: &RewardConfig,
    params: &VehicleParams,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let grid = ActionGrid::default();

    let ticks = cfg.max_depth as usize * cfg.substeps_per_node();
    let mut agents = Vec::with_capacity(snapshot.agents.len());
    for a in &snapshot.agents {
        let future = predictions
            .agent_futures
            .get(&a.id)
            .ok_or_else(|| Error::PredictionUnavailable(a.id.clone()))?;
        agents.push((a.kind, a.length, a.width, future.as_slice()));
    }
    let obstacles = ObstacleField::new(&snapshot.statics, agents, cfg.sub_dt, ticks);

    let learned: Vec<GridIndex> = if cfg.ablation.use_learned_prior {
        ego_prior_actions(predictions, params, &grid, cfg.node_duration)?
            .into_iter()
            .map(|a| grid.snap(a))
            .collect()
    } else {
        Vec::new()
    };

    let ctx = ExpansionContext {
        grid: &grid,
        cfg,
        reward: RewardContext {
            map: snapshot.map,
            obstacles: &obstacles,
            cfg: reward_cfg,
            params,
        },
        learned: &learned,
    };

    let root_s = project_to_centerline(&snapshot.ego.pose(), snapshot.map, true)?.arc_length;
    let mut tree = SearchTree::new(Node::root(snapshot.ego, root_s), prev_executed);
    let mut stats = SearchStats::default();

    for _ in 0..cfg.n_simulations {
        let mut path = SimulationPath::default();
        let mut id = NodeId::ROOT;
        loop {
            let node = tree.node(id);
            if node.terminal || !node.expanded {
                break;
            }
            let k = select_child(node, cfg)?;
            path.push(id, k, child_reward(&tree, id, k));
            id = node.edges[k].child;
        }
        let node = tree.node(id);
        if !node.terminal && !node.expanded {
            expand(&mut tree, id, &ctx)?;
            let node = tree.node(id);
            if node.expanded && !node.edges.is_empty() {
                stats.expansions += 1;
                let k = select_child(node, cfg)?;
                path.push(id, k, child_reward(&tree, id, k));
                stats.max_depth = stats.max_depth.max(node.depth + 1);
            }
        }
        backup(&mut tree, &path, cfg)?;
        stats.simulations += 1;
    }
    stats.nodes = tree.len();
    Ok(SearchOutcome {
        tree,
        stats,
        learned_actions: learned,
    })
}

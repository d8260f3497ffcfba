use alloc::vec::Vec;

use super::{BackupRule, SearchConfig};
use crate::error::{Error, Result};
use crate::kinematics::{EgoState, GridIndex};
use crate::math::sqrt;
use crate::reward::RewardBreakdown;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Statistics of one (node, action) edge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EdgeStats {
    /// Running mean of the returns delivered through this edge.
    pub q: f64,
    pub n: u32,
    /// Normalized prior.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub action: GridIndex,
    pub stats: EdgeStats,
    pub child: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub state: EgoState,
    /// Root is depth 0; each level spans one node duration.
    pub depth: u32,
    /// Seconds since the search root.
    pub time: f64,
    pub incoming_action: Option<GridIndex>,
    pub reward: Option<RewardBreakdown>,
    pub terminal: bool,
    pub expanded: bool,
    pub edges: Vec<Edge>,
    pub parent: Option<NodeId>,
    /// Route arc-length of `state`, cached for the children's progress term.
    pub(crate) route_s: f64,
}

impl Node {
    pub fn root(state: EgoState, route_s: f64) -> Self {
        Self {
            state,
            depth: 0,
            time: 0.0,
            incoming_action: None,
            reward: None,
            terminal: false,
            expanded: false,
            edges: Vec::new(),
            parent: None,
            route_s,
        }
    }

    pub fn route_arc_length(&self) -> f64 {
        self.route_s
    }

    pub fn visits(&self) -> u32 {
        self.edges.iter().map(|e| e.stats.n).sum()
    }
}

/// Arena of nodes; [`NodeId::ROOT`] is always present.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTree {
    nodes: Vec<Node>,
    /// Action the root window is centered on (previously executed action).
    pub root_anchor: Option<GridIndex>,
}

impl SearchTree {
    pub fn new(root: Node, root_anchor: Option<GridIndex>) -> Self {
        Self {
            nodes: alloc::vec![root],
            root_anchor,
        }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Appends `node` as a child of `parent` reached by `action` with prior
    /// `p`; sets the node's parent, incoming action and depth.
    pub fn add_child(&mut self, parent: NodeId, action: GridIndex, p: f64, mut node: Node) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        node.parent = Some(parent);
        node.incoming_action = Some(action);
        node.depth = self.nodes[parent.index()].depth + 1;
        self.nodes.push(node);
        self.nodes[parent.index()].edges.push(Edge {
            action,
            stats: EdgeStats { q: 0.0, n: 0, p },
            child: id,
        });
        id
    }

    /// Pre-order traversal from the root (children in edge order).
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = alloc::vec![NodeId::ROOT];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.node(id).edges.iter().rev().map(|e| e.child));
        }
        out
    }
}

/// PUCT score of one edge given the parent's total visit count.
#[inline]
fn puct(stats: &EdgeStats, sqrt_total: f64, c_puct: f64) -> f64 {
    stats.q + c_puct * stats.p * sqrt_total / (1.0 + stats.n as f64)
}

/// Index of the child maximizing `Q + c_puct * P * sqrt(sum N) / (1 + N)`.
/// Ties go to the higher prior, then to the lower index.
pub fn select_child(node: &Node, cfg: &SearchConfig) -> Result<usize> {
    if node.terminal {
        return Err(Error::internal("select_child on a terminal node"));
    }
    if !node.expanded || node.edges.is_empty() {
        return Err(Error::internal("select_child on an unexpanded node"));
    }
    let sqrt_total = sqrt(node.visits() as f64);
    let mut best = 0;
    let mut best_score = puct(&node.edges[0].stats, sqrt_total, cfg.c_puct);
    for (i, e) in node.edges.iter().enumerate().skip(1) {
        let score = puct(&e.stats, sqrt_total, cfg.c_puct);
        if score > best_score || (score == best_score && e.stats.p > node.edges[best].stats.p) {
            best = i;
            best_score = score;
        }
    }
    Ok(best)
}

/// Root-to-leaf edges of one pass and the reward of each edge's child node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationPath {
    pub edges: Vec<(NodeId, usize)>,
    pub rewards: Vec<f64>,
}

impl SimulationPath {
    pub fn push(&mut self, node: NodeId, edge: usize, reward: f64) {
        self.edges.push((node, edge));
        self.rewards.push(reward);
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Return delivered to every edge of the path under `rule`.
    pub fn returns(&self, gamma: f64, rule: BackupRule) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.rewards.len()];
        let mut below = 0.0;
        for k in (0..self.rewards.len()).rev() {
            let inclusive = self.rewards[k] + gamma * below;
            out[k] = match rule {
                BackupRule::Inclusive => inclusive,
                BackupRule::Exclusive => below,
            };
            below = inclusive;
        }
        out
    }
}

/// Running-mean update of every edge on `path` with its cumulative return.
pub fn backup(tree: &mut SearchTree, path: &SimulationPath, cfg: &SearchConfig) -> Result<()> {
    if path.rewards.len() != path.edges.len() {
        return Err(Error::internal("path rewards do not align with its edges"));
    }
    let returns = path.returns(cfg.gamma, cfg.backup);
    for (&(node, edge), g) in path.edges.iter().zip(returns) {
        let stats = &mut tree.node_mut(node).edges[edge].stats;
        let n = stats.n as f64;
        stats.q = (n * stats.q + g) / (n + 1.0);
        stats.n += 1;
    }
    Ok(())
}

/// Greedy descent by Q over visited children; ties prefer more visits, then
/// the lower index.
pub fn extract_plan(tree: &SearchTree) -> Result<Vec<GridIndex>> {
    if !tree.root().expanded {
        return Err(Error::internal("cannot extract a plan from an unexpanded root"));
    }
    let mut plan = Vec::new();
    let mut id = NodeId::ROOT;
    loop {
        let node = tree.node(id);
        let mut best: Option<&Edge> = None;
        for e in node.edges.iter().filter(|e| e.stats.n >= 1) {
            let better = match best {
                None => true,
                Some(b) => e.stats.q > b.stats.q || (e.stats.q == b.stats.q && e.stats.n > b.stats.n),
            };
            if better {
                best = Some(e);
            }
        }
        let Some(edge) = best else { break };
        plan.push(edge.action);
        id = edge.child;
        if tree.node(id).terminal {
            break;
        }
    }
    Ok(plan)
}
